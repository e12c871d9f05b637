#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <functional>
#include <string>

#include "specside/graph.hpp"

namespace specside {

using SparseMatrix = Eigen::SparseMatrix<double>;

// I - A/d with self-loop (or leftover weight) mass on the diagonal of A.
SparseMatrix normalized_laplacian(const RegularGraph& g);
SparseMatrix normalized_laplacian(const RegularGraph& g, const EdgeWeighting& x);

struct EigenPairs {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // one column per value
};

// `count` smallest eigenpairs of a dense symmetric matrix (LAPACK dsyevr).
EigenPairs dense_smallest_eigenpairs(Eigen::MatrixXd a, int count);

using BlockOperator = std::function<void(const Eigen::MatrixXd&, Eigen::MatrixXd&)>;

struct LobpcgOptions {
  int block = 0;  // 0: count plus a small guard band
  double tol = 1e-9;
  int max_iter = 3000;
  std::uint64_t seed = 1;
};

struct LobpcgResult : EigenPairs {
  Eigen::VectorXd residuals;
  int iterations = 0;
  bool converged = false;
};

// Smallest eigenpairs of a symmetric operator restricted to the orthogonal
// complement of `deflate` (orthonormal columns, may be null). `start` warm
// starts the block. Unpreconditioned block method with an orthonormal
// [X, R, P] basis, which tolerates repeated eigenvalues.
LobpcgResult lobpcg_smallest(const BlockOperator& op, int n, int count,
                             const Eigen::MatrixXd* deflate,
                             const Eigen::MatrixXd* start,
                             const LobpcgOptions& opt);

// Dense solver up to this size, block iteration above.
inline constexpr int kDenseLimit = 4000;

EigenPairs smallest_eigenpairs(const SparseMatrix& l, int count,
                               std::uint64_t seed = 1);
Eigen::VectorXd smallest_laplacian_eigenvalues(const RegularGraph& g, int count);

struct SpectralEmbedding {
  Eigen::MatrixXd basis;        // n x k, orthonormal columns
  Eigen::VectorXd eigenvalues;  // k + 1 smallest

  int n() const { return int(basis.rows()); }
  int k() const { return int(basis.cols()); }
};

SpectralEmbedding embed(const RegularGraph& g, int k);

struct ClusterMeans {
  std::vector<Eigen::VectorXd> means;
  std::vector<int> sizes;
};

ClusterMeans cluster_means(const SpectralEmbedding& emb, const Labeling& iota, int k);

// Lazy walk matrix used by subspace iteration: I/2 + A/(2d).
inline constexpr const char* kWalkMatrix = "lazy: I/2 + A/(2d)";

int subspace_iterations(int n, double phi);
Eigen::MatrixXd subspace_projection(const RegularGraph& g, int k, int q,
                                    std::uint64_t seed);

// Operator norm of QQ^T - UU^T for matrices with orthonormal columns.
double projection_gap(const Eigen::MatrixXd& q, const Eigen::MatrixXd& u);

struct VarianceCheck {
  double max_ratio = 0.0;
  double max_numerator = 0.0;
};

// Max over random unit directions a of sum_i sum_{v in C_i} <f_v - mu_i, a>^2,
// reported raw and divided by 4 eps / phi^2.
VarianceCheck variance_bound_check(const SpectralEmbedding& emb,
                                   const ClusterMeans& means, const Labeling& iota,
                                   double eps, double phi, int trials,
                                   std::uint64_t seed);

// || f_v - (1/d) sum over the d neighbor slots (self-loops give f_v) ||.
double neighbor_average_deviation(const RegularGraph& g, const SpectralEmbedding& emb,
                                  Vertex v);

std::string embedding_cache_path(const std::string& dir, const RegularGraph& g, int k);
void save_embedding(const SpectralEmbedding& emb, const std::string& path);
// Returns false if the file is missing; throws ParseError if it is corrupt.
bool load_embedding(const std::string& path, SpectralEmbedding& out);

}  // namespace specside
