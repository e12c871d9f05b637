#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "specside/generate.hpp"
#include "specside/graph.hpp"
#include "specside/oracle.hpp"

namespace specside {

struct GeneratorSpec {
  std::string kind = "planted";  // planted | uninformative_middle
  int n = 0;
  int k = 2;
  int d = 0;
  double eta = 1.0;
  std::vector<double> eps;  // target_eps for planted, middle fraction otherwise
};

// xi given as a number, or resolved per instance ("default", "ceiling").
struct XiSpec {
  std::string mode = "default";
  double value = 0.0;
};

struct ExperimentConfig {
  GeneratorSpec gen;
  std::vector<double> deltas;
  std::vector<std::uint64_t> seeds;
  OracleBackend backend = OracleBackend::exact;
  XiSpec xi;
  std::vector<std::string> classifiers;
  LabelNoise label_mode = LabelNoise::uniform_wrong;
  bool strict = false;
  bool record_runtime = false;
  std::string output;
  int threads = 0;            // 0: hardware concurrency
  std::string cache_dir;      // embedding cache; empty disables it
};

const std::vector<std::string>& known_classifiers();

// Throws ParameterError with a field path on malformed configs.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

struct SettingInputs {
  int n = 0, k = 2, d = 0;
  double eps = 0.0, phi = 0.0, eta = 1.0, delta = 0.0, xi = 0.0;
  double min_mean_sq = INFINITY;
};

// Violated parameter-table constraints, one message each.
std::vector<std::string> setting_warnings(const SettingInputs& s);

struct SweepResultRow {
  std::string gen;
  int n = 0, k = 0, d = 0;
  double eps_measured = 0.0, phi_certified = 0.0, eta = 0.0, delta = 0.0;
  std::uint64_t seed = 0;
  std::string classifier;
  std::optional<double> rate;
  std::optional<double> rate_middle;
  std::optional<double> runtime_ms;
  int branch_agree = 0, branch_ambiguous = 0, branch_impostor = 0, branch_trust_spectral = 0;
  std::string error;
};

struct SweepOutput {
  std::vector<SweepResultRow> rows;
  std::vector<std::string> warnings;  // deduplicated, first-seen order
};

SweepOutput run_sweep(const ExperimentConfig& cfg);

const char* csv_header();
void write_csv(const std::vector<SweepResultRow>& rows, std::ostream& os);
std::vector<SweepResultRow> read_csv(std::istream& is);

int thread_budget(int requested);

}  // namespace specside
