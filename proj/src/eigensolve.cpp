#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "specside/errors.hpp"
#include "specside/rng.hpp"
#include "specside/spectral.hpp"

namespace specside {

EigenPairs dense_smallest_eigenpairs(Eigen::MatrixXd a, int count) {
  const int n = int(a.rows());
  if (count < 1 || count > n) throw DomainError("bad eigenpair count");
  Eigen::VectorXd w(n);
  Eigen::MatrixXd z(n, count);
  std::vector<lapack_int> support(2 * std::size_t(count));
  lapack_int found = 0;
  lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', n, a.data(), n, 0.0,
                                   0.0, 1, count, 0.0, &found, w.data(), z.data(), n,
                                   support.data());
  if (info != 0 || found != count)
    throw NumericError("dsyevr failed (info=" + std::to_string(info) + ")");
  return {w.head(count), z};
}

namespace {

// Orthonormalize the columns of `v` against `q` (already orthonormal) and
// against each other; nearly dependent columns are dropped.
Eigen::MatrixXd orthonormalize_against(const Eigen::MatrixXd& q, Eigen::MatrixXd v) {
  Eigen::MatrixXd out(v.rows(), v.cols());
  int kept = 0;
  for (int j = 0; j < v.cols(); ++j) {
    Eigen::VectorXd c = v.col(j);
    const double before = c.norm();
    if (before == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass) {
      if (q.cols() > 0) c -= q * (q.transpose() * c);
      if (kept > 0) c -= out.leftCols(kept) * (out.leftCols(kept).transpose() * c);
    }
    const double after = c.norm();
    if (after <= 1e-10 * before) continue;
    out.col(kept++) = c / after;
  }
  return out.leftCols(kept);
}

void deflate_block(const Eigen::MatrixXd* d, Eigen::MatrixXd& v) {
  if (d && d->cols() > 0) v -= *d * (d->transpose() * v);
}

LobpcgResult dense_fallback(const BlockOperator& op, int n, int count,
                            const Eigen::MatrixXd* deflate) {
  // Build an orthonormal basis of the allowed subspace and diagonalize there.
  Eigen::MatrixXd q0(n, 0);
  if (deflate) q0 = *deflate;
  Eigen::MatrixXd basis = orthonormalize_against(q0, Eigen::MatrixXd::Identity(n, n));
  Eigen::MatrixXd ab(n, basis.cols());
  op(basis, ab);
  Eigen::MatrixXd h = basis.transpose() * ab;
  h = 0.5 * (h + h.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  LobpcgResult r;
  count = std::min<int>(count, int(basis.cols()));
  r.values = es.eigenvalues().head(count);
  r.vectors = basis * es.eigenvectors().leftCols(count);
  r.residuals = Eigen::VectorXd::Zero(count);
  r.converged = true;
  return r;
}

}  // namespace

LobpcgResult lobpcg_smallest(const BlockOperator& op, int n, int count,
                             const Eigen::MatrixXd* deflate,
                             const Eigen::MatrixXd* start, const LobpcgOptions& opt) {
  const int p = deflate ? int(deflate->cols()) : 0;
  if (count < 1 || count > n - p) throw DomainError("bad eigenpair count");
  int b = opt.block > 0 ? std::max(opt.block, count) : count + std::max(3, count / 2);
  b = std::min(b, n - p);
  if (n <= 200 || 3 * b + p >= n) return dense_fallback(op, n, count, deflate);

  Rng rng(opt.seed);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd x0(n, b);
  int from_start = start ? std::min<int>(b, int(start->cols())) : 0;
  if (from_start > 0) x0.leftCols(from_start) = start->leftCols(from_start);
  for (int j = from_start; j < b; ++j)
    for (int i = 0; i < n; ++i) x0(i, j) = gauss(rng);
  deflate_block(deflate, x0);
  Eigen::MatrixXd none(n, 0);
  Eigen::MatrixXd x = orthonormalize_against(deflate ? *deflate : none, x0);
  while (x.cols() < b) {
    Eigen::MatrixXd extra(n, b - x.cols());
    for (int j = 0; j < extra.cols(); ++j)
      for (int i = 0; i < n; ++i) extra(i, j) = gauss(rng);
    deflate_block(deflate, extra);
    Eigen::MatrixXd both(n, p + x.cols());
    if (p) both.leftCols(p) = *deflate;
    both.rightCols(x.cols()) = x;
    Eigen::MatrixXd add = orthonormalize_against(both, extra);
    Eigen::MatrixXd grown(n, x.cols() + add.cols());
    grown << x, add;
    x = grown;
  }

  Eigen::MatrixXd ax(n, b);
  op(x, ax);
  {
    Eigen::MatrixXd h = x.transpose() * ax;
    h = 0.5 * (h + h.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    x = x * es.eigenvectors();
    ax = ax * es.eigenvectors();
  }
  Eigen::MatrixXd pdir(n, 0);
  LobpcgResult res;
  Eigen::VectorXd theta = (x.transpose() * ax).diagonal();
  for (int it = 0; it < opt.max_iter; ++it) {
    Eigen::MatrixXd r = ax - x * theta.asDiagonal();
    deflate_block(deflate, r);
    Eigen::VectorXd rn = r.colwise().norm();
    res.iterations = it;
    if (rn.head(count).maxCoeff() <= opt.tol) {
      res.converged = true;
      break;
    }
    Eigen::MatrixXd base(n, p + b);
    if (p) base.leftCols(p) = *deflate;
    base.rightCols(b) = x;
    Eigen::MatrixXd extra(n, r.cols() + pdir.cols());
    extra << r, pdir;
    Eigen::MatrixXd w = orthonormalize_against(base, extra);
    if (w.cols() == 0) {
      res.converged = rn.head(count).maxCoeff() <= 1e3 * opt.tol;
      break;
    }
    Eigen::MatrixXd aw(n, w.cols());
    op(w, aw);
    const int m = b + int(w.cols());
    Eigen::MatrixXd s(n, m), as(n, m);
    s << x, w;
    as << ax, aw;
    Eigen::MatrixXd h = s.transpose() * as;
    h = 0.5 * (h + h.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    Eigen::MatrixXd y = es.eigenvectors().leftCols(b);
    x = s * y;
    ax = as * y;
    theta = es.eigenvalues().head(b);
    pdir = w * y.bottomRows(w.cols());
  }
  Eigen::MatrixXd r = ax - x * theta.asDiagonal();
  deflate_block(deflate, r);
  res.residuals = r.colwise().norm().head(count).transpose();
  if (!res.converged) res.converged = res.residuals.maxCoeff() <= opt.tol;
  res.values = theta.head(count);
  res.vectors = x.leftCols(count);
  return res;
}

EigenPairs smallest_eigenpairs(const SparseMatrix& l, int count, std::uint64_t seed) {
  const int n = int(l.rows());
  if (n <= kDenseLimit) return dense_smallest_eigenpairs(Eigen::MatrixXd(l), count);
  LobpcgOptions opt;
  opt.seed = derive_seed(seed, stream::eigen_start, n);
  opt.tol = 1e-10;
  auto r = lobpcg_smallest([&l](const Eigen::MatrixXd& in, Eigen::MatrixXd& out) { out = l * in; },
                           n, count, nullptr, nullptr, opt);
  if (!r.converged)
    throw NumericError("block eigensolver did not converge; max residual " +
                       std::to_string(r.residuals.maxCoeff()));
  return r;
}

Eigen::VectorXd smallest_laplacian_eigenvalues(const RegularGraph& g, int count) {
  return smallest_eigenpairs(normalized_laplacian(g), count).values;
}

}  // namespace specside
