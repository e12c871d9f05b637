#pragma once

#include <cstdint>
#include <random>

namespace specside {

using Rng = std::mt19937_64;

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Sub-stream seeds: every consumer of randomness derives its own seed from
// (parent seed, stream tag, indices) so results never depend on call order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t h = mix64(seed ^ mix64(tag));
  h = mix64(h ^ mix64(a + 0x632be59bd9b4e019ULL));
  return mix64(h ^ mix64(b + 0x85157af5ULL));
}

namespace stream {
enum : std::uint64_t {
  sizes = 1,
  crossing,
  internal,
  middle,
  labels,
  oracle_noise,
  means,
  permutation,
  walks,
  sketch,
  directions,
  eigen_start,
  corruption,
};
}

// Uniform double in [0,1) from the top 53 bits.
inline double uniform01(Rng& rng) { return double(rng() >> 11) * 0x1.0p-53; }

}  // namespace specside
