#include "specside/spectral.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "specside/errors.hpp"
#include "specside/rng.hpp"

namespace specside {

SparseMatrix normalized_laplacian(const RegularGraph& g) {
  return normalized_laplacian(g, EdgeWeighting(g));
}

SparseMatrix normalized_laplacian(const RegularGraph& g, const EdgeWeighting& x) {
  const double inv_d = 1.0 / g.d();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(std::size_t(g.n()) + 2 * g.num_edges());
  for (Vertex u = 0; u < g.n(); ++u) t.emplace_back(u, u, 1.0 - x.loop_mass(g, u) * inv_d);
  for (int e = 0; e < g.num_edges(); ++e) {
    auto [u, v] = g.edges()[e];
    t.emplace_back(u, v, -x[e] * inv_d);
    t.emplace_back(v, u, -x[e] * inv_d);
  }
  SparseMatrix l(g.n(), g.n());
  l.setFromTriplets(t.begin(), t.end());
  return l;
}

SpectralEmbedding embed(const RegularGraph& g, int k) {
  if (k < 1 || k >= g.n()) throw DomainError("embed needs 1 <= k < n");
  SparseMatrix l = normalized_laplacian(g);
  EigenPairs e = smallest_eigenpairs(l, k + 1, g.hash());
  for (int i = 0; i <= k; ++i) {
    double res = (l * e.vectors.col(i) - e.values[i] * e.vectors.col(i)).norm();
    if (res > 1e-7)
      throw NumericError("eigenpair " + std::to_string(i) + " residual " + std::to_string(res));
  }
  SpectralEmbedding out;
  out.basis = e.vectors.leftCols(k);
  out.eigenvalues = e.values;
  return out;
}

ClusterMeans cluster_means(const SpectralEmbedding& emb, const Labeling& iota, int k) {
  ClusterMeans cm;
  cm.means.assign(k, Eigen::VectorXd::Zero(emb.k()));
  cm.sizes.assign(k, 0);
  for (Vertex u = 0; u < emb.n(); ++u) {
    int c = iota[u];
    if (c < 0 || c >= k) throw DomainError("label out of range");
    cm.means[c] += emb.basis.row(u).transpose();
    ++cm.sizes[c];
  }
  for (int c = 0; c < k; ++c) {
    if (cm.sizes[c] == 0) throw DomainError("empty cluster " + std::to_string(c + 1));
    cm.means[c] /= cm.sizes[c];
  }
  return cm;
}

int subspace_iterations(int n, double phi) {
  return int(std::ceil(8.0 * std::log(double(n)) / std::log1p(phi * phi / 4.0)));
}

Eigen::MatrixXd subspace_projection(const RegularGraph& g, int k, int q, std::uint64_t seed) {
  if (q < 1) throw DomainError("subspace iteration needs q >= 1");
  if (k < 1 || k >= g.n()) throw DomainError("subspace iteration needs 1 <= k < n");
  SparseMatrix l = normalized_laplacian(g);
  SparseMatrix id(g.n(), g.n());
  id.setIdentity();
  SparseMatrix m = id - 0.5 * l;
  for (int attempt = 0; attempt <= 3; ++attempt) {
    Rng rng(derive_seed(seed, stream::sketch, attempt));
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd y(g.n(), k);
    for (int j = 0; j < k; ++j)
      for (int i = 0; i < g.n(); ++i) y(i, j) = gauss(rng);
    bool deficient = false;
    for (int t = 0; t < q && !deficient; ++t) {
      Eigen::MatrixXd z = m * y;
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(z);
      Eigen::VectorXd diag = qr.matrixQR().diagonal().cwiseAbs();
      if (diag.minCoeff() <= 1e-13 * std::max(diag.maxCoeff(), 1e-300)) deficient = true;
      y = qr.householderQ() * Eigen::MatrixXd::Identity(g.n(), k);
    }
    if (!deficient) return y;
  }
  throw NumericError("sketch stayed rank deficient after 3 resamples");
}

double projection_gap(const Eigen::MatrixXd& q, const Eigen::MatrixXd& u) {
  // Nonzero singular values of QQ^T - UU^T are the sines of the principal
  // angles, each appearing twice; the largest is sqrt(1 - sigma_min(Q^T U)^2).
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(q.transpose() * u);
  double smin = svd.singularValues().minCoeff();
  if (q.cols() != u.cols()) return 1.0;
  return std::sqrt(std::max(0.0, 1.0 - smin * smin));
}

VarianceCheck variance_bound_check(const SpectralEmbedding& emb, const ClusterMeans& means,
                                   const Labeling& iota, double eps, double phi, int trials,
                                   std::uint64_t seed) {
  if (trials < 1) throw DomainError("trials must be >= 1");
  const int k = emb.k();
  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(k, k);
  for (Vertex v = 0; v < emb.n(); ++v) {
    Eigen::VectorXd dv = emb.basis.row(v).transpose() - means.means[iota[v]];
    scatter += dv * dv.transpose();
  }
  Rng rng(derive_seed(seed, stream::directions));
  std::normal_distribution<double> gauss;
  const double denom = 4.0 * eps / (phi * phi);
  VarianceCheck out;
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXd a(k);
    for (int i = 0; i < k; ++i) a[i] = gauss(rng);
    a.normalize();
    double num = a.dot(scatter * a);
    out.max_numerator = std::max(out.max_numerator, num);
  }
  if (denom > 0)
    out.max_ratio = out.max_numerator / denom;
  else
    out.max_ratio = out.max_numerator <= 1e-20 ? 0.0 : INFINITY;
  return out;
}

double neighbor_average_deviation(const RegularGraph& g, const SpectralEmbedding& emb,
                                  Vertex v) {
  Eigen::VectorXd avg = double(g.self_loops(v)) * emb.basis.row(v).transpose();
  for (Vertex w : g.neighbors(v)) avg += emb.basis.row(w).transpose();
  avg /= g.d();
  return (emb.basis.row(v).transpose() - avg).norm();
}

namespace {
constexpr char kMagic[8] = {'S', 'P', 'S', 'E', 'M', 'B', '0', '1'};
}

std::string embedding_cache_path(const std::string& dir, const RegularGraph& g, int k) {
  std::ostringstream s;
  s << dir << "/emb_" << std::hex << g.hash() << std::dec << "_k" << k << ".bin";
  return s.str();
}

void save_embedding(const SpectralEmbedding& emb, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  std::int64_t n = emb.n(), k = emb.k();
  out.write(kMagic, 8);
  out.write(reinterpret_cast<const char*>(&n), 8);
  out.write(reinterpret_cast<const char*>(&k), 8);
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < k; ++j) {
      double x = emb.basis(i, j);
      out.write(reinterpret_cast<const char*>(&x), 8);
    }
  out.write(reinterpret_cast<const char*>(emb.eigenvalues.data()), 8 * (k + 1));
}

bool load_embedding(const std::string& path, SpectralEmbedding& emb) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  char magic[8];
  std::int64_t n = 0, k = 0;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(&n), 8);
  in.read(reinterpret_cast<char*>(&k), 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0 || n < 1 || k < 1 || k >= n)
    throw ParseError(0, "bad embedding cache header in " + path);
  emb.basis.resize(n, k);
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < k; ++j) in.read(reinterpret_cast<char*>(&emb.basis(i, j)), 8);
  emb.eigenvalues.resize(k + 1);
  in.read(reinterpret_cast<char*>(emb.eigenvalues.data()), 8 * (k + 1));
  if (!in) throw ParseError(0, "truncated embedding cache " + path);
  return true;
}

}  // namespace specside
