#pragma once

#include <stdexcept>
#include <string>

namespace specside {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParameterError : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct NumericError : Error { using Error::Error; };
struct SamplingFailure : Error { using Error::Error; };
struct InvariantViolation : Error { using Error::Error; };
struct SizeError : Error { using Error::Error; };

struct ParseError : Error {
  ParseError(int line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line(line) {}
  int line;
};

}  // namespace specside
