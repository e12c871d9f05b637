#pragma once

#include <string>
#include <vector>

#include "specside/graph.hpp"
#include "specside/spectral.hpp"

namespace specside {

struct FlaggedEdgeSet {
  std::vector<int> flagged;  // F: endpoints labeled differently by alpha
  std::vector<int> kept;     // E+
  std::vector<char> is_flagged;
};

FlaggedEdgeSet flag_edges(const RegularGraph& g, const Labeling& alpha);

struct SdpOptions {
  double tol = 1e-3;       // relative objective improvement per window
  int max_iter = 5000;
  double feas_tol = 1e-6;
  double rho0 = 10.0;
  double step0 = 0.1;      // first per-coordinate step, decays as 1/sqrt(t)
  int window = 100;        // iterations per convergence / infeasibility check
  int eig_count = 12;      // penalized eigenvalues per iteration
  // Basis of the bottom-k eigenspace of the unweighted Laplacian; computed
  // exactly when empty (e.g. pass a subspace_projection sketch instead).
  Eigen::MatrixXd projector_basis;
};

struct SdpSolution {
  EdgeWeighting x;
  double objective = 0.0;
  double certified_min_eig = 0.0;  // min eigenvalue of P(L_x - theta I)P on range(P)
  double theta = 0.0;
  double rho = 0.0;
  int iterations = 0;
  bool converged = false;
  bool restored = false;           // feasibility restoration moved the iterate
  std::vector<double> accepted_penalized;  // penalized value of accepted iterates
};

// Minimize sum_{e in F} x_e over x in [0,1]^E, x = 1 on E+, subject to
// P(L_x - theta I)P >= 0, by projected subgradient on an exact penalty.
SdpSolution sdp_reweight(const RegularGraph& g, const FlaggedEdgeSet& flagged, int k,
                         double theta, const SdpOptions& opt = {});

// Smallest eigenvalue of P(L_x - theta I)P restricted to range(P), where
// P = I - UU^T.
double projected_min_eig(const RegularGraph& g, const EdgeWeighting& x,
                         const Eigen::MatrixXd& u, double theta);

double weighted_eigenvalue(const RegularGraph& g, const EdgeWeighting& x, int index);

struct RefinedPartition {
  Labeling clusters;
  std::vector<std::vector<Vertex>> removed;  // X_1..X_k
  std::vector<double> conductance_lower;     // lambda_2(L_x{C'_i}) / 2
  std::vector<double> sweep_upper;           // best sweep cut found in C'_i
  double cross_weight = 0.0;
  int moves = 0;
};

RefinedPartition repair_partition(const RegularGraph& g, const EdgeWeighting& x,
                                  const Labeling& alpha, double phi, int k);

// Exact rho_k by subset enumeration; n <= 12.
double kway_expansion_bruteforce(const RegularGraph& g, int k);

struct RefineReport {
  SdpSolution sdp;
  RefinedPartition partition;
  double gamma = 0.0;             // fraction of vertices alpha gets wrong
  bool in_regime = false;         // gamma <= phi^3 / (100 eta k)
  double cross_weight_truth = 0.0;  // sum of x over ground-truth crossing edges
  int symmetric_difference = 0;   // sum_i |C'_i  symdiff  C_i| after matching
  double lambda_k1 = 0.0;         // lambda_{k+1}(L_x)
};

RefineReport refine_pipeline(const RegularGraph& g, const Labeling& iota,
                             const Labeling& alpha, double phi, double eta, int k,
                             const SdpOptions& opt = {});

}  // namespace specside
