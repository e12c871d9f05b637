#pragma once

#include <cstdint>
#include <string>

#include "specside/graph.hpp"

namespace specside {

// Planted k-cluster instance: random near-regular expanders inside clusters,
// floor(target_eps * d * |C_i|) crossing half-edges per cluster matched across
// clusters, leftover degree patched with self-loops. Cluster sizes follow a
// linear ramp so that max/min size is close to `eta`.
PlantedInstance generate_planted(int n, int k, int d, double target_eps, double eta,
                                 std::uint64_t seed);

// Exactly `count` distinct vertices get a uniformly drawn wrong label.
Labeling corrupt_labels(const Labeling& iota, int k, int count, std::uint64_t seed);

// Two expanders A, B and a middle set M (|M| = floor(eps n)); each middle
// vertex has d/2 neighbors in A and d/2 in B. Ground truth puts M with A.
PlantedInstance generate_uninformative_middle(int n, int d, double eps, std::uint64_t seed);

enum class LabelNoise { uniform_wrong, fixed_target };

LabelNoise parse_label_noise(const std::string& s);
const char* to_string(LabelNoise m);

Labeling perturb_labels(const Labeling& iota, int k, double delta, LabelNoise mode,
                        std::uint64_t seed);

// Spectral-gap floor used when accepting a random cluster expander.
double expander_acceptance_threshold(int d);

}  // namespace specside
