#include "specside/generate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "specside/errors.hpp"
#include "specside/rng.hpp"
#include "specside/spectral.hpp"

namespace specside {

namespace {

std::uint64_t pair_key(int u, int v) {
  if (u > v) std::swap(u, v);
  return (std::uint64_t(std::uint32_t(u)) << 32) | std::uint32_t(v);
}

// Random simple graph on `members` realizing residual degrees `want` (pairing
// model with local rejection, restarted when it gets stuck). Whatever cannot
// be placed on the final attempt becomes self-loops.
void random_internal_edges(const std::vector<Vertex>& members, std::vector<int> want,
                           Rng& rng, std::vector<std::pair<int, int>>& edges,
                           std::vector<int>& loops) {
  std::vector<int> points;
  for (std::size_t i = 0; i < members.size(); ++i)
    for (int t = 0; t < want[i]; ++t) points.push_back(int(i));
  if (points.size() % 2 == 1) {
    // Odd residual: the vertex with the largest need keeps one self-loop.
    auto it = std::max_element(want.begin(), want.end());
    int i = int(it - want.begin());
    ++loops[members[i]];
    points.erase(std::find(points.begin(), points.end(), i));
  }
  constexpr int kAttempts = 200;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    std::vector<int> pts = points;
    std::unordered_set<std::uint64_t> used;
    std::vector<std::pair<int, int>> local;
    bool stuck = false;
    while (pts.size() >= 2) {
      bool placed = false;
      for (int tries = 0; tries < 64 && !placed; ++tries) {
        std::size_t a = std::uniform_int_distribution<std::size_t>(0, pts.size() - 1)(rng);
        std::size_t b = std::uniform_int_distribution<std::size_t>(0, pts.size() - 2)(rng);
        if (b >= a) ++b;
        int u = pts[a], v = pts[b];
        if (u == v || used.count(pair_key(u, v))) continue;
        used.insert(pair_key(u, v));
        local.emplace_back(u, v);
        if (a < b) std::swap(a, b);
        pts[a] = pts.back(), pts.pop_back();
        pts[b] = pts.back(), pts.pop_back();
        placed = true;
      }
      if (placed) continue;
      // Rejection keeps failing: look for any admissible pair explicitly.
      std::vector<int> distinct = pts;
      std::sort(distinct.begin(), distinct.end());
      distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
      int fu = -1, fv = -1;
      for (std::size_t i = 0; i < distinct.size() && fu < 0; ++i)
        for (std::size_t j = i + 1; j < distinct.size(); ++j)
          if (!used.count(pair_key(distinct[i], distinct[j]))) {
            fu = distinct[i], fv = distinct[j];
            break;
          }
      if (fu < 0) {
        stuck = true;
        break;
      }
      used.insert(pair_key(fu, fv));
      local.emplace_back(fu, fv);
      pts.erase(std::find(pts.begin(), pts.end(), fu));
      pts.erase(std::find(pts.begin(), pts.end(), fv));
    }
    if (stuck && attempt + 1 < kAttempts) continue;
    for (int p : pts) ++loops[members[p]];
    for (auto [u, v] : local) edges.emplace_back(members[u], members[v]);
    return;
  }
}

// Cross-cluster matching of half-edges; unmatched stubs become self-loops.
void match_crossing_stubs(const std::vector<std::pair<int, int>>& stubs, Rng& rng,
                          std::vector<std::pair<int, int>>& edges, std::vector<int>& loops) {
  std::vector<std::pair<int, int>> order = stubs;  // (vertex, cluster)
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<char> done(order.size(), 0);
  std::unordered_set<std::uint64_t> used;
  for (std::size_t s = 0; s < order.size(); ++s) {
    if (done[s]) continue;
    done[s] = 1;
    bool matched = false;
    for (std::size_t t = s + 1; t < order.size(); ++t) {
      if (done[t] || order[t].second == order[s].second) continue;
      auto key = pair_key(order[s].first, order[t].first);
      if (used.count(key)) continue;
      used.insert(key);
      done[t] = 1;
      edges.emplace_back(order[s].first, order[t].first);
      matched = true;
      break;
    }
    if (!matched) ++loops[order[s].first];
  }
}

// Builds the graph, checks every cluster's induced expander, and fills in
// the measured parameters. Returns false if some cluster's gap is too small.
bool finish_instance(PlantedInstance& inst, int n, int d,
                     const std::vector<std::pair<int, int>>& edges,
                     const std::vector<int>& loops, int& bad_cluster) {
  inst.graph = RegularGraph(n, d, edges, loops);
  auto clusters = clusters_of(inst.iota, inst.k);
  const double floor = expander_acceptance_threshold(d);
  inst.phi_certified = INFINITY;
  inst.phi_method = "exhaustive";
  inst.eps_measured = 0.0;
  std::size_t lo = n, hi = 0;
  for (int c = 0; c < inst.k; ++c) {
    auto b = internal_conductance_bound(inst.graph, clusters[c]);
    // Cheeger bound is lambda_2 / 2, so this asks lambda_2 >= floor.
    if (b.bound < floor / 2) {
      bad_cluster = c;
      return false;
    }
    inst.phi_certified = std::min(inst.phi_certified, b.bound);
    if (b.method == "cheeger") inst.phi_method = "cheeger";
    if (int(clusters[c].size()) < n)
      inst.eps_measured = std::max(inst.eps_measured, conductance(inst.graph, clusters[c]).value());
    lo = std::min(lo, clusters[c].size());
    hi = std::max(hi, clusters[c].size());
  }
  inst.eta = double(hi) / double(lo);
  return true;
}

}  // namespace

double expander_acceptance_threshold(int d) {
  // Random d-regular graphs sit near 1 - 2 sqrt(d-1)/d; demanding 0.3 for
  // small d would reject forever, so the floor scales with that value.
  double ramanujan = 1.0 - 2.0 * std::sqrt(double(d - 1)) / d;
  return std::min(0.3, 0.6 * ramanujan);
}

PlantedInstance generate_planted(int n, int k, int d, double target_eps, double eta,
                                 std::uint64_t seed) {
  if (k < 2) throw ParameterError("need k >= 2");
  if (d < 3) throw ParameterError("need d >= 3");
  if (!(target_eps >= 0.0 && target_eps < 0.5)) throw ParameterError("target_eps must lie in [0, 1/2)");
  if (!(eta >= 1.0)) throw ParameterError("eta must be >= 1");
  if (n < 2 * k) throw ParameterError("n too small for k clusters");

  std::vector<double> w(k);
  for (int i = 0; i < k; ++i) w[i] = 1.0 + (eta - 1.0) * i / (k - 1);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<int> sizes(k);
  double cum = 0.0;
  int prev = 0;
  for (int i = 0; i < k; ++i) {
    cum += w[i];
    int bound = i + 1 == k ? n : int(std::lround(n * cum / total));
    sizes[i] = bound - prev;
    prev = bound;
  }

  std::vector<int> crossing(k);
  for (int i = 0; i < k; ++i) {
    crossing[i] = int(std::floor(target_eps * d * sizes[i]));
    int max_internal = d - crossing[i] / sizes[i];
    if (max_internal > sizes[i] - 1)
      throw ParameterError("cluster of size " + std::to_string(sizes[i]) +
                           " cannot host internal degree " + std::to_string(max_internal));
  }

  Rng layout(derive_seed(seed, stream::sizes));
  std::vector<Vertex> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), layout);

  PlantedInstance inst;
  inst.k = k;
  inst.generator = "planted";
  inst.iota.assign(n, 0);
  std::vector<std::vector<Vertex>> members(k);
  for (int i = 0, at = 0; i < k; ++i)
    for (int t = 0; t < sizes[i]; ++t) {
      members[i].push_back(perm[at]);
      inst.iota[perm[at++]] = i;
    }
  for (auto& m : members) std::sort(m.begin(), m.end());

  Rng cross_rng(derive_seed(seed, stream::crossing));
  std::vector<int> stubs_at(n, 0);
  std::vector<std::pair<int, int>> stubs;
  for (int i = 0; i < k; ++i) {
    std::vector<Vertex> order = members[i];
    std::shuffle(order.begin(), order.end(), cross_rng);
    const int each = crossing[i] / sizes[i], extra = crossing[i] % sizes[i];
    for (int t = 0; t < sizes[i]; ++t) {
      stubs_at[order[t]] = each + (t < extra ? 1 : 0);
      for (int s = 0; s < stubs_at[order[t]]; ++s) stubs.emplace_back(order[t], i);
    }
  }
  std::vector<std::pair<int, int>> cross_edges;
  std::vector<int> cross_loops(n, 0);
  match_crossing_stubs(stubs, cross_rng, cross_edges, cross_loops);

  std::vector<int> attempt(k, 0);
  constexpr int kMaxAttempts = 50;
  std::vector<std::vector<std::pair<int, int>>> internal(k);
  std::vector<std::vector<int>> internal_loops(k, std::vector<int>(n, 0));
  auto build_cluster = [&](int i) {
    internal[i].clear();
    std::fill(internal_loops[i].begin(), internal_loops[i].end(), 0);
    Rng rng(derive_seed(seed, stream::internal, i, attempt[i]));
    std::vector<int> want(members[i].size());
    for (std::size_t t = 0; t < members[i].size(); ++t) want[t] = d - stubs_at[members[i][t]];
    random_internal_edges(members[i], want, rng, internal[i], internal_loops[i]);
  };
  for (int i = 0; i < k; ++i) build_cluster(i);
  while (true) {
    std::vector<std::pair<int, int>> edges = cross_edges;
    std::vector<int> loops = cross_loops;
    for (int i = 0; i < k; ++i) {
      edges.insert(edges.end(), internal[i].begin(), internal[i].end());
      for (Vertex u : members[i]) loops[u] += internal_loops[i][u];
    }
    int bad = -1;
    if (finish_instance(inst, n, d, edges, loops, bad)) return inst;
    if (++attempt[bad] >= kMaxAttempts)
      throw ParameterError("no cluster expander with spectral gap above " +
                           std::to_string(expander_acceptance_threshold(d)) + " after " +
                           std::to_string(kMaxAttempts) + " attempts");
    build_cluster(bad);
  }
}

PlantedInstance generate_uninformative_middle(int n, int d, double eps, std::uint64_t seed) {
  if (d < 4 || d % 2 != 0) throw ParameterError("need an even d >= 4");
  if (!(eps >= 0.0 && eps < 0.5)) throw ParameterError("eps must lie in [0, 1/2)");
  const int m = int(std::floor(eps * n));
  const int na = (n - m + 1) / 2, nb = n - m - na;
  const int half = d / 2;
  if (nb <= d || m > nb)
    throw ParameterError("infeasible sizes: |A|=" + std::to_string(na) + " |B|=" +
                         std::to_string(nb) + " |M|=" + std::to_string(m));

  Rng layout(derive_seed(seed, stream::sizes));
  std::vector<Vertex> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), layout);
  std::vector<Vertex> a(perm.begin(), perm.begin() + na);
  std::vector<Vertex> b(perm.begin() + na, perm.begin() + na + nb);
  std::vector<Vertex> mid(perm.begin() + na + nb, perm.end());
  std::sort(a.begin(), a.end()), std::sort(b.begin(), b.end()), std::sort(mid.begin(), mid.end());

  PlantedInstance inst;
  inst.k = 2;
  inst.generator = "uninformative";
  inst.iota.assign(n, 0);
  inst.middle.assign(n, 0);
  for (Vertex v : b) inst.iota[v] = 1;
  for (Vertex v : mid) inst.middle[v] = 1;

  Rng mrng(derive_seed(seed, stream::middle));
  std::vector<std::pair<int, int>> mid_edges;
  std::vector<int> load(n, 0);
  // Round-robin over shuffled sides spreads the middle edges evenly and keeps
  // each middle vertex's d/2 endpoints distinct.
  for (const std::vector<Vertex>* side : {&a, &b}) {
    std::vector<Vertex> order = *side;
    std::shuffle(order.begin(), order.end(), mrng);
    std::size_t at = 0;
    for (Vertex x : mid)
      for (int t = 0; t < half; ++t) {
        Vertex y = order[at++ % order.size()];
        mid_edges.emplace_back(x, y);
        ++load[y];
      }
  }

  std::vector<Vertex> cluster_a = a;
  cluster_a.insert(cluster_a.end(), mid.begin(), mid.end());
  std::sort(cluster_a.begin(), cluster_a.end());
  std::vector<const std::vector<Vertex>*> sides = {&a, &b};
  std::vector<int> attempt(2, 0);
  std::vector<std::vector<std::pair<int, int>>> internal(2);
  std::vector<std::vector<int>> internal_loops(2, std::vector<int>(n, 0));
  auto build_side = [&](int s) {
    internal[s].clear();
    std::fill(internal_loops[s].begin(), internal_loops[s].end(), 0);
    Rng rng(derive_seed(seed, stream::internal, s, attempt[s]));
    std::vector<int> want(sides[s]->size());
    for (std::size_t t = 0; t < want.size(); ++t) want[t] = d - load[(*sides[s])[t]];
    random_internal_edges(*sides[s], want, rng, internal[s], internal_loops[s]);
  };
  build_side(0), build_side(1);
  constexpr int kMaxAttempts = 50;
  while (true) {
    std::vector<std::pair<int, int>> edges = mid_edges;
    std::vector<int> loops(n, 0);
    for (int s = 0; s < 2; ++s) {
      edges.insert(edges.end(), internal[s].begin(), internal[s].end());
      for (Vertex u : *sides[s]) loops[u] += internal_loops[s][u];
    }
    int bad = -1;
    if (finish_instance(inst, n, d, edges, loops, bad)) return inst;
    if (++attempt[bad] >= kMaxAttempts)
      throw ParameterError("no side expander with spectral gap above threshold");
    build_side(bad);
  }
}

LabelNoise parse_label_noise(const std::string& s) {
  if (s == "uniform_wrong") return LabelNoise::uniform_wrong;
  if (s == "fixed_target") return LabelNoise::fixed_target;
  throw ParameterError("unknown label noise mode '" + s + "'");
}

const char* to_string(LabelNoise m) {
  return m == LabelNoise::uniform_wrong ? "uniform_wrong" : "fixed_target";
}

Labeling perturb_labels(const Labeling& iota, int k, double delta, LabelNoise mode,
                        std::uint64_t seed) {
  if (!(delta >= 0.0 && delta <= 1.0)) throw DomainError("delta must lie in [0,1]");
  if (k < 2 && delta > 0.0) throw DomainError("wrong labels need k >= 2");
  Rng rng(derive_seed(seed, stream::labels));
  Labeling out(iota.size());
  for (std::size_t u = 0; u < iota.size(); ++u) {
    if (iota[u] < 0 || iota[u] >= k) throw DomainError("label out of range");
    double coin = uniform01(rng);
    std::uint64_t pick = rng();
    if (coin >= delta) {
      out[u] = iota[u];
    } else if (mode == LabelNoise::fixed_target) {
      out[u] = (iota[u] + 1) % k;
    } else {
      int r = int(pick % std::uint64_t(k - 1));
      out[u] = r < iota[u] ? r : r + 1;
    }
  }
  return out;
}

Labeling corrupt_labels(const Labeling& iota, int k, int count, std::uint64_t seed) {
  if (count < 0 || count > int(iota.size())) throw DomainError("corruption count out of range");
  if (k < 2 && count > 0) throw DomainError("wrong labels need k >= 2");
  Rng rng(derive_seed(seed, stream::corruption));
  std::vector<Vertex> order(iota.size());
  std::iota(order.begin(), order.end(), 0);
  Labeling out = iota;
  // Partial Fisher-Yates: the first `count` slots are the corrupted set.
  for (int i = 0; i < count; ++i) {
    std::size_t j = i + std::size_t(rng() % (order.size() - i));
    std::swap(order[i], order[j]);
    int r = int(rng() % std::uint64_t(k - 1));
    Vertex u = order[i];
    out[u] = r < iota[u] ? r : r + 1;
  }
  return out;
}

}  // namespace specside
