#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "specside/graph.hpp"
#include "specside/oracle.hpp"

namespace specside {

inline constexpr int kStar = -1;  // cross vertex

// tau(u): smallest label whose representative is within the radius
// phi^2/(400 eta) * ||f_rep||^2_apx, else kStar. Not memoized.
int spectral_label(const InnerProductOracle& o, const ApproxMeans& means, double phi,
                   double eta, Vertex u);

// Memoizing wrapper around spectral_label. Not safe to share across threads.
class SpectralLabeler {
 public:
  SpectralLabeler(const InnerProductOracle& o, const ApproxMeans& means, double phi,
                  double eta);
  int operator()(Vertex u) const;
  int k() const { return k_; }
  int n() const { return int(cache_.size()); }
  double phi() const { return phi_; }
  double eta() const { return eta_; }

 private:
  const InnerProductOracle* o_;
  int k_;
  double phi_, eta_;
  std::vector<Vertex> rep_;  // by label
  std::vector<double> radius_;
  mutable std::vector<int> cache_;
};

// Regularized induced subgraph on (SpecCluster(i) ∩ LabelCluster(j)) ∪ X.
// Never materialized; membership is evaluated on demand.
struct CrossGraphView {
  const RegularGraph& g;
  const SpectralLabeler& tau;
  const Labeling& sigma;
  int i, j;

  bool member(Vertex v) const {
    int t = tau(v);
    return t == kStar || (t == i && sigma[v] == j);
  }
};

enum class Crossing { neither, in_X, in_NXstar };

Crossing is_crossing_vertex_step(const RegularGraph& g, const SpectralLabeler& tau,
                                 Vertex w, int i);

enum class Provenance : std::uint8_t { agree, ambiguous, impostor_trust_label, trust_spectral };
const char* to_string(Provenance p);

struct Decision {
  int label;
  Provenance why;
  int crossing_walks = -1;  // walk classifier only
};

Decision classify_polytime(const RegularGraph& g, const Labeling& sigma,
                           const SpectralLabeler& tau, Vertex u);

int walk_count(int n);
// L = ceil(150 / phi^2 * ln(1/delta)); delta is floored at 1/n.
int walk_length(double phi, double delta, int n);

struct RobustConnResult {
  bool connected = false;
  int crossing = 0;
  int walks = 0;
};

RobustConnResult robust_conn(const RegularGraph& g, const Labeling& sigma,
                             const SpectralLabeler& tau, int length, Vertex u,
                             std::uint64_t seed);

Decision classify_walk(const RegularGraph& g, const Labeling& sigma,
                       const SpectralLabeler& tau, int length, Vertex u, std::uint64_t seed);

// Exact probability that the length-L lazy walk from u inside `view` visits
// X ∪ N(X)*; dynamic program over the view component (<= 5000 vertices).
double exact_crossing_probability(const CrossGraphView& view, Vertex u, int length);

int baseline_majority(const RegularGraph& g, const Labeling& sigma, int k, Vertex u);
int baseline_majority_pp(const RegularGraph& g, const Labeling& sigma, int k, double phi,
                         Vertex u);
int baseline_naive_spectral(const SpectralLabeler& tau, const Labeling& sigma, Vertex u);

double misclassification(const Labeling& out, const Labeling& iota);
double matched_misclassification(const Labeling& out, const Labeling& iota, int k);
// Optimal label map out-id -> truth-id maximizing agreement.
std::vector<int> best_label_matching(const Labeling& out, const Labeling& iota, int k);

struct ClassifierOutput {
  Labeling labels;
  std::vector<Provenance> provenance;
  std::vector<int> crossing_walks;  // -1 where robust_conn was not queried
};

ClassifierOutput classify_all_polytime(const RegularGraph& g, const Labeling& sigma,
                                       const SpectralLabeler& tau);
ClassifierOutput classify_all_walk(const RegularGraph& g, const Labeling& sigma,
                                   const SpectralLabeler& tau, int length,
                                   std::uint64_t seed);

}  // namespace specside
