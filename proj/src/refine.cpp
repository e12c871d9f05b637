#include "specside/refine.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include "specside/classify.hpp"
#include "specside/errors.hpp"
#include "specside/rng.hpp"

namespace specside {

FlaggedEdgeSet flag_edges(const RegularGraph& g, const Labeling& alpha) {
  if (int(alpha.size()) != g.n()) throw DomainError("labeling has wrong length");
  FlaggedEdgeSet f;
  f.is_flagged.assign(g.num_edges(), 0);
  for (int e = 0; e < g.num_edges(); ++e) {
    auto [u, v] = g.edges()[e];
    if (alpha[u] != alpha[v]) {
      f.flagged.push_back(e);
      f.is_flagged[e] = 1;
    } else {
      f.kept.push_back(e);
    }
  }
  return f;
}

namespace {

// L_x with a fixed sparsity pattern whose values are rewritten in place.
class WeightedLaplacian {
 public:
  explicit WeightedLaplacian(const RegularGraph& g) : g_(g), l_(normalized_laplacian(g)) {
    l_.makeCompressed();
    diag_.resize(g.n());
    off_.resize(g.num_edges());
    for (Vertex u = 0; u < g.n(); ++u) diag_[u] = slot(u, u);
    for (int e = 0; e < g.num_edges(); ++e) {
      auto [u, v] = g.edges()[e];
      off_[e] = {slot(u, v), slot(v, u)};
    }
  }

  void set(const std::vector<double>& x) {
    double* val = l_.valuePtr();
    const double inv_d = 1.0 / g_.d();
    for (Vertex u = 0; u < g_.n(); ++u) val[diag_[u]] = 0.0;
    for (int e = 0; e < g_.num_edges(); ++e) {
      auto [u, v] = g_.edges()[e];
      val[off_[e].first] = val[off_[e].second] = -x[e] * inv_d;
      val[diag_[u]] += x[e] * inv_d;
      val[diag_[v]] += x[e] * inv_d;
    }
  }

  const SparseMatrix& matrix() const { return l_; }

 private:
  int slot(int row, int col) const {
    // Column-major storage: entry (row, col) lives in column `col`.
    const int* outer = l_.outerIndexPtr();
    const int* inner = l_.innerIndexPtr();
    const int* lo = inner + outer[col];
    const int* hi = inner + outer[col + 1];
    const int* it = std::lower_bound(lo, hi, row);
    if (it == hi || *it != row) throw NumericError("missing Laplacian entry");
    return int(it - inner);
  }

  const RegularGraph& g_;
  SparseMatrix l_;
  std::vector<int> diag_;
  std::vector<std::pair<int, int>> off_;
};

Eigen::MatrixXd bottom_basis(const RegularGraph& g, int k, const SdpOptions& opt) {
  if (opt.projector_basis.size() > 0) {
    if (opt.projector_basis.rows() != g.n() || opt.projector_basis.cols() != k)
      throw DomainError("projector basis has wrong shape");
    return opt.projector_basis;
  }
  return embed(g, k).basis;
}

double projected_min_eig_impl(const SparseMatrix& lx, const Eigen::MatrixXd& u, double theta) {
  const int n = int(lx.rows());
  if (n <= kDenseLimit) {
    Eigen::MatrixXd b = Eigen::MatrixXd(lx);
    b.diagonal().array() -= theta;
    Eigen::MatrixXd pb = b - u * (u.transpose() * b);
    Eigen::MatrixXd m = pb - (pb * u) * u.transpose();
    // Lift range(U) far above the spectrum so the minimum is taken on range(P).
    m += 10.0 * u * u.transpose();
    m = 0.5 * (m + m.transpose()).eval();
    return dense_smallest_eigenpairs(std::move(m), 1).values[0];
  }
  LobpcgOptions lo;
  lo.tol = 1e-9;
  lo.max_iter = 5000;
  auto op = [&](const Eigen::MatrixXd& in, Eigen::MatrixXd& out) {
    out = lx * in - theta * in;
    out -= u * (u.transpose() * out);
  };
  auto r = lobpcg_smallest(op, n, 1, &u, nullptr, lo);
  return r.values[0];
}

}  // namespace

double projected_min_eig(const RegularGraph& g, const EdgeWeighting& x,
                         const Eigen::MatrixXd& u, double theta) {
  return projected_min_eig_impl(normalized_laplacian(g, x), u, theta);
}

double weighted_eigenvalue(const RegularGraph& g, const EdgeWeighting& x, int index) {
  return smallest_eigenpairs(normalized_laplacian(g, x), index + 1).values[index];
}

SdpSolution sdp_reweight(const RegularGraph& g, const FlaggedEdgeSet& flagged, int k,
                         double theta, const SdpOptions& opt) {
  if (k < 1 || k >= g.n()) throw DomainError("need 1 <= k < n");
  SdpSolution sol;
  sol.theta = theta;
  sol.rho = opt.rho0;
  std::vector<double> x(g.num_edges(), 1.0);
  const auto& F = flagged.flagged;
  if (F.empty()) {
    sol.x = EdgeWeighting(g, x);
    const Eigen::MatrixXd u = bottom_basis(g, k, opt);
    sol.certified_min_eig = projected_min_eig(g, sol.x, u, theta);
    sol.converged = sol.certified_min_eig >= -opt.feas_tol;
    return sol;
  }
  const Eigen::MatrixXd u = bottom_basis(g, k, opt);
  WeightedLaplacian lx(g);
  const int n = g.n();
  const double inv_d = 1.0 / g.d();
  auto op = [&](const Eigen::MatrixXd& in, Eigen::MatrixXd& out) {
    out = lx.matrix() * in - theta * in;
    out -= u * (u.transpose() * out);
  };
  const int count = std::min(opt.eig_count, n - k - 1);
  LobpcgOptions lo;
  lo.block = count + 4;
  lo.tol = 1e-7;
  lo.max_iter = 40;
  lo.seed = derive_seed(g.hash(), stream::eigen_start, k);
  Eigen::MatrixXd warm;

  auto objective = [&](const std::vector<double>& v) {
    double s = 0.0;
    for (int e : F) s += v[e];
    return s;
  };

  std::vector<double> best_feasible;
  double best_feasible_obj = INFINITY;
  double incumbent = INFINITY;
  double window_start_obj = INFINITY;
  int infeasible_in_window = 0;
  std::vector<double> grad(F.size());
  bool stopped = false;
  int t = 0;
  for (t = 1; t <= opt.max_iter; ++t) {
    lx.set(x);
    auto eig = lobpcg_smallest(op, n, count, &u, warm.size() ? &warm : nullptr, lo);
    warm = eig.vectors;
    double pen = 0.0;
    for (int i = 0; i < eig.values.size(); ++i) pen += std::max(0.0, -eig.values[i]);
    const double obj = objective(x);
    const double f = obj + sol.rho * pen;
    if (f < incumbent) {
      incumbent = f;
      sol.accepted_penalized.push_back(f);
    }
    if (pen <= opt.feas_tol) {
      if (obj < best_feasible_obj) best_feasible_obj = obj, best_feasible = x;
    } else {
      ++infeasible_in_window;
    }

    std::fill(grad.begin(), grad.end(), 1.0);
    for (int i = 0; i < eig.values.size(); ++i) {
      if (eig.values[i] >= 0.0) continue;
      const auto vi = eig.vectors.col(i);
      for (std::size_t a = 0; a < F.size(); ++a) {
        auto [p, q] = g.edges()[F[a]];
        const double diff = vi[p] - vi[q];
        grad[a] -= sol.rho * diff * diff * inv_d;
      }
    }
    const double step = opt.step0 / std::sqrt(double(t));
    for (std::size_t a = 0; a < F.size(); ++a)
      x[F[a]] = std::clamp(x[F[a]] - step * grad[a], 0.0, 1.0);

    if (t % opt.window == 0) {
      if (infeasible_in_window == opt.window) {
        sol.rho *= 2.0;
        incumbent = INFINITY;  // penalized values are not comparable across rho
        sol.accepted_penalized.push_back(NAN);
      }
      infeasible_in_window = 0;
      if (std::isfinite(best_feasible_obj) && std::isfinite(window_start_obj) &&
          window_start_obj - best_feasible_obj <= opt.tol * std::max(1.0, best_feasible_obj)) {
        stopped = true;
        break;
      }
      window_start_obj = best_feasible_obj;
    }
  }
  sol.iterations = std::min(t, opt.max_iter);

  std::vector<double> xc = best_feasible.empty() ? x : best_feasible;
  lx.set(xc);
  double cert = projected_min_eig_impl(lx.matrix(), u, theta);
  if (cert < -opt.feas_tol) {
    // lambda_min is concave in x and x = 1 is feasible, so bisect along the
    // segment towards 1 for the closest feasible point.
    const std::vector<double> base = xc;
    auto at = [&](double s) {
      std::vector<double> y = base;
      for (int e : F) y[e] = base[e] + s * (1.0 - base[e]);
      return y;
    };
    double lo_s = 0.0, hi_s = 1.0;
    lx.set(at(hi_s));
    double hi_cert = projected_min_eig_impl(lx.matrix(), u, theta);
    if (hi_cert >= -opt.feas_tol) {
      for (int it = 0; it < 30 && hi_s - lo_s > 1e-7; ++it) {
        double mid = 0.5 * (lo_s + hi_s);
        lx.set(at(mid));
        double c = projected_min_eig_impl(lx.matrix(), u, theta);
        if (c >= 0.0)
          hi_s = mid, hi_cert = c;
        else
          lo_s = mid;
      }
      xc = at(hi_s);
      cert = hi_cert;
      sol.restored = true;
    }
  }
  sol.x = EdgeWeighting(g, xc);
  sol.objective = objective(xc);
  sol.certified_min_eig = cert;
  sol.converged = stopped && cert >= -opt.feas_tol;
  return sol;
}

namespace {

// Induced weighted subgraph G_x{C}: edges leaving C turn into loop mass.
struct WeightedCore {
  std::vector<Vertex> members;
  std::vector<int> local;  // global -> local, -1 outside
  std::vector<double> inside;  // total internal weight per local vertex
  SparseMatrix laplacian;
};

WeightedCore weighted_core(const RegularGraph& g, const EdgeWeighting& x,
                           const std::vector<Vertex>& members) {
  WeightedCore c;
  c.members = members;
  c.local.assign(g.n(), -1);
  for (int i = 0; i < int(members.size()); ++i) c.local[members[i]] = i;
  c.inside.assign(members.size(), 0.0);
  const double inv_d = 1.0 / g.d();
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < int(members.size()); ++i) {
    auto nb = g.neighbors(members[i]);
    auto ids = g.incident_edges(members[i]);
    for (std::size_t s = 0; s < nb.size(); ++s) {
      int j = c.local[nb[s]];
      if (j < 0) continue;
      c.inside[i] += x[ids[s]];
      t.emplace_back(i, j, -x[ids[s]] * inv_d);
    }
    t.emplace_back(i, i, c.inside[i] * inv_d);
  }
  c.laplacian.resize(int(members.size()), int(members.size()));
  c.laplacian.setFromTriplets(t.begin(), t.end());
  return c;
}

struct SweepResult {
  double best_conductance = INFINITY;   // over all sweep cuts
  std::vector<Vertex> violating;        // largest violating small side
};

SweepResult fiedler_sweep(const RegularGraph& g, const EdgeWeighting& x,
                          const WeightedCore& c, double limit) {
  SweepResult out;
  const int m = int(c.members.size());
  if (m < 2) return out;
  auto eig = smallest_eigenpairs(c.laplacian, 2);
  Eigen::VectorXd f = eig.vectors.col(1);
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return f[a] < f[b]; });
  std::vector<char> in_prefix(m, 0);
  double cut = 0.0;
  int best_size = 0, best_j = -1;
  for (int j = 1; j < m; ++j) {
    int v = order[j - 1];
    double to_prefix = 0.0;
    auto nb = g.neighbors(c.members[v]);
    auto ids = g.incident_edges(c.members[v]);
    for (std::size_t s = 0; s < nb.size(); ++s) {
      int w = c.local[nb[s]];
      if (w >= 0 && in_prefix[w]) to_prefix += x[ids[s]];
    }
    in_prefix[v] = 1;
    cut += c.inside[v] - 2.0 * to_prefix;
    const int small = std::min(j, m - j);
    const double phi_s = std::max(0.0, cut) / (double(g.d()) * small);
    out.best_conductance = std::min(out.best_conductance, phi_s);
    if (phi_s < limit && small > best_size) best_size = small, best_j = j;
  }
  if (best_j >= 0) {
    if (best_j <= m - best_j)
      for (int a = 0; a < best_j; ++a) out.violating.push_back(c.members[order[a]]);
    else
      for (int a = best_j; a < m; ++a) out.violating.push_back(c.members[order[a]]);
  }
  // Singleton cuts are sweep cuts of the indicator direction; check the worst.
  if (out.violating.empty()) {
    int worst = int(std::min_element(c.inside.begin(), c.inside.end()) - c.inside.begin());
    double phi_v = c.inside[worst] / g.d();
    out.best_conductance = std::min(out.best_conductance, phi_v);
    if (phi_v < limit) out.violating.push_back(c.members[worst]);
  }
  return out;
}

}  // namespace

RefinedPartition repair_partition(const RegularGraph& g, const EdgeWeighting& x,
                                  const Labeling& alpha, double phi, int k) {
  auto seeds = clusters_of(alpha, k);
  RefinedPartition rp;
  rp.clusters = alpha;
  rp.removed.resize(k);
  const double limit = phi / 2.0;
  for (int i = 0; i < k; ++i) {
    std::vector<Vertex> core = seeds[i];
    const std::size_t cap = seeds[i].size() / 2;
    while (core.size() >= 2) {
      auto c = weighted_core(g, x, core);
      auto sweep = fiedler_sweep(g, x, c, limit);
      if (sweep.violating.empty() || rp.removed[i].size() + sweep.violating.size() > cap) break;
      std::vector<char> drop(g.n(), 0);
      for (Vertex v : sweep.violating) drop[v] = 1, rp.removed[i].push_back(v);
      std::erase_if(core, [&](Vertex v) { return drop[v] != 0; });
    }
    std::sort(rp.removed[i].begin(), rp.removed[i].end());
  }

  // Greedy singleton moves among removed vertices; each move strictly lowers
  // the total crossing weight.
  std::vector<Vertex> movable;
  for (auto& r : rp.removed) movable.insert(movable.end(), r.begin(), r.end());
  std::sort(movable.begin(), movable.end());
  auto weight_to = [&](Vertex v) {
    std::vector<double> w(k, 0.0);
    auto nb = g.neighbors(v);
    auto ids = g.incident_edges(v);
    for (std::size_t s = 0; s < nb.size(); ++s) w[rp.clusters[nb[s]]] += x[ids[s]];
    return w;
  };
  constexpr double kMinGain = 1e-12;
  while (true) {
    double best_gain = kMinGain;
    Vertex best_v = -1;
    int best_to = -1;
    for (Vertex v : movable) {
      auto w = weight_to(v);
      const int from = rp.clusters[v];
      for (int j = 0; j < k; ++j) {
        if (j == from) continue;
        double gain = w[j] - w[from];
        if (gain > best_gain || (best_v >= 0 && gain == best_gain && j < best_to && v == best_v)) {
          best_gain = gain, best_v = v, best_to = j;
        }
      }
    }
    if (best_v < 0) break;
    rp.clusters[best_v] = best_to;
    ++rp.moves;
  }

  for (int e = 0; e < g.num_edges(); ++e) {
    auto [u, v] = g.edges()[e];
    if (rp.clusters[u] != rp.clusters[v]) rp.cross_weight += x[e];
  }
  auto finals = clusters_of(rp.clusters, k);
  for (int i = 0; i < k; ++i) {
    if (finals[i].size() < 2) {
      rp.conductance_lower.push_back(finals[i].empty() ? 0.0 : 1.0);
      rp.sweep_upper.push_back(finals[i].empty() ? 0.0 : 1.0);
      continue;
    }
    auto c = weighted_core(g, x, finals[i]);
    auto eig = smallest_eigenpairs(c.laplacian, 2);
    rp.conductance_lower.push_back(std::max(0.0, eig.values[1]) / 2.0);
    rp.sweep_upper.push_back(fiedler_sweep(g, x, c, -1.0).best_conductance);
  }
  return rp;
}

double kway_expansion_bruteforce(const RegularGraph& g, int k) {
  const int n = g.n();
  if (n > 12) throw SizeError("brute-force k-way expansion needs n <= 12");
  if (k < 1 || k > n) throw DomainError("need 1 <= k <= n");
  const std::uint32_t full = (1u << n) - 1;
  const std::size_t size = std::size_t(1) << n;
  std::vector<int> cut(size, 0);
  std::vector<double> phi(size, INFINITY);
  for (std::uint32_t s = 1; s <= full; ++s) {
    int v = std::countr_zero(s);
    std::uint32_t rest = s & (s - 1);
    int inside = 0;
    for (Vertex w : g.neighbors(v)) inside += (rest >> w) & 1;
    cut[s] = cut[rest] + int(g.neighbors(v).size()) - 2 * inside;
    int sz = std::popcount(s);
    if (s != full) phi[s] = double(cut[s]) / (double(g.d()) * std::min(sz, n - sz));
  }
  if (k == 1) return *std::min_element(phi.begin() + 1, phi.end());
  // h[M]: best max-conductance of j disjoint nonempty subsets of M.
  std::vector<double> h(size, INFINITY);
  for (std::uint32_t m = 1; m <= full; ++m) {
    double best = phi[m];
    for (std::uint32_t sub = (m - 1) & m; sub; sub = (sub - 1) & m) best = std::min(best, phi[sub]);
    h[m] = best;
  }
  for (int j = 2; j <= k; ++j) {
    std::vector<double> next(size, INFINITY);
    for (std::uint32_t m = 1; m <= full; ++m) {
      double best = INFINITY;
      for (std::uint32_t sub = (m - 1) & m; sub; sub = (sub - 1) & m)
        best = std::min(best, std::max(phi[sub], h[m & ~sub]));
      next[m] = best;
    }
    h.swap(next);
  }
  return h[full];
}

RefineReport refine_pipeline(const RegularGraph& g, const Labeling& iota,
                             const Labeling& alpha, double phi, double eta, int k,
                             const SdpOptions& opt) {
  RefineReport rep;
  rep.gamma = matched_misclassification(alpha, iota, k);
  rep.in_regime = rep.gamma <= phi * phi * phi / (100.0 * eta * k);
  auto flagged = flag_edges(g, alpha);
  rep.sdp = sdp_reweight(g, flagged, k, phi * phi / 5.0, opt);
  rep.partition = repair_partition(g, rep.sdp.x, alpha, phi, k);
  for (int e = 0; e < g.num_edges(); ++e) {
    auto [u, v] = g.edges()[e];
    if (iota[u] != iota[v]) rep.cross_weight_truth += rep.sdp.x[e];
  }
  auto map = best_label_matching(rep.partition.clusters, iota, k);
  for (Vertex u = 0; u < g.n(); ++u)
    if (map[rep.partition.clusters[u]] != iota[u]) rep.symmetric_difference += 2;
  rep.lambda_k1 = weighted_eigenvalue(g, rep.sdp.x, k);
  return rep;
}

}  // namespace specside
