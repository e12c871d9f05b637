#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "specside/graph.hpp"
#include "specside/spectral.hpp"

namespace specside {

// apx(u, v) approximates <f_u, f_v> within xi / n.
class InnerProductOracle {
 public:
  InnerProductOracle(const Eigen::MatrixXd& basis, double xi, std::string backend);
  virtual ~InnerProductOracle() = default;

  virtual double apx(Vertex u, Vertex v) const { return exact(u, v); }
  double exact(Vertex u, Vertex v) const;

  int n() const { return n_; }
  int dim() const { return k_; }
  double xi() const { return xi_; }
  const std::string& backend() const { return backend_; }

 private:
  int n_, k_;
  std::vector<double> rows_;  // row-major copy of the basis
  double xi_;
  std::string backend_;
};

enum class OracleBackend { exact, noisy };

OracleBackend parse_oracle_backend(const std::string& s);

// Exact: true dot products. Noisy: adds a symmetric perturbation uniform in
// [-xi/n, xi/n] derived statelessly from (seed, min(u,v), max(u,v)).
std::unique_ptr<InnerProductOracle> make_oracle(const Eigen::MatrixXd& basis,
                                                OracleBackend backend, double xi,
                                                std::uint64_t seed);

// Largest xi with xi/n <= phi^2 / (20^4 eta) * min_i ||mu_i||^2.
double xi_ceiling(const ClusterMeans& means, double phi, double eta, int n);
// Absolute default budget for the polynomial-time pipeline.
inline double default_xi(int n) { return n * 1e-10; }

double apx_distance_sq(const InnerProductOracle& o, Vertex u, Vertex v);

struct ApproxMeans {
  std::vector<Vertex> representatives;  // u_1..u_k
  std::vector<int> pi;                  // representative index -> label id

  int k() const { return int(representatives.size()); }
  // Representative whose mean stands in for label `l`.
  Vertex rep_for_label(int l) const;
};

int sample_count(double factor, int k, double eta);

// One peeling pass over a fresh uniform sample; may return != k vertices.
std::vector<Vertex> approx_cluster_means_once(const InnerProductOracle& o, int k, double eta,
                                              std::uint64_t seed);
// Retries (5 attempts) until exactly k representatives come back.
std::vector<Vertex> approx_cluster_means(const InnerProductOracle& o, int k, double eta,
                                         std::uint64_t seed);

// Majority sigma-label among sampled vertices near each representative.
std::vector<int> recover_permutation(const InnerProductOracle& o,
                                     const std::vector<Vertex>& reps, const Labeling& sigma,
                                     int k, double eta, double phi, std::uint64_t seed);

// Means plus permutation, retrying both with fresh seeds on sampling failure.
ApproxMeans build_approx_means(const InnerProductOracle& o, const Labeling& sigma, int k,
                               double eta, double phi, std::uint64_t seed, int attempts = 5);

}  // namespace specside
