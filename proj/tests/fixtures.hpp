#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "specside/graph.hpp"

namespace fx {

using specside::Labeling;
using specside::RegularGraph;
using Edges = std::vector<std::pair<int, int>>;

// Pads every vertex up to degree d with self-loops.
inline RegularGraph with_loops(int n, int d, const Edges& edges) {
  std::vector<int> deg(n, 0);
  for (auto [u, v] : edges) ++deg[u], ++deg[v];
  std::vector<int> loops(n);
  for (int u = 0; u < n; ++u) loops[u] = d - deg[u];
  return RegularGraph(n, d, edges, loops);
}

// c disjoint copies of K_m, copy i on vertices [i*m, (i+1)*m).
inline RegularGraph cliques(int m, int c) {
  Edges e;
  for (int b = 0; b < c; ++b)
    for (int u = 0; u < m; ++u)
      for (int v = u + 1; v < m; ++v) e.emplace_back(b * m + u, b * m + v);
  return with_loops(m * c, m - 1, e);
}

inline Labeling clique_labels(int m, int c) {
  Labeling l(m * c);
  for (int u = 0; u < m * c; ++u) l[u] = u / m;
  return l;
}

inline RegularGraph cycle(int n) {
  Edges e;
  for (int u = 0; u < n; ++u) e.emplace_back(std::min(u, (u + 1) % n), std::max(u, (u + 1) % n));
  std::sort(e.begin(), e.end());
  return with_loops(n, 2, e);
}

// Random simple graph with max degree <= d, padded to d-regular with loops.
inline RegularGraph random_graph(int n, int d, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p);
  std::vector<int> deg(n, 0);
  Edges e;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (deg[u] < d && deg[v] < d && coin(rng)) e.emplace_back(u, v), ++deg[u], ++deg[v];
  return with_loops(n, d, e);
}

inline Eigen::MatrixXd dense_laplacian(const RegularGraph& g) {
  Eigen::MatrixXd l = Eigen::MatrixXd::Identity(g.n(), g.n());
  for (auto [u, v] : g.edges()) {
    l(u, v) -= 1.0 / g.d();
    l(v, u) -= 1.0 / g.d();
  }
  for (int u = 0; u < g.n(); ++u) l(u, u) -= double(g.self_loops(u)) / g.d();
  return l;
}

inline Eigen::VectorXd reference_eigenvalues(const RegularGraph& g) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_laplacian(g));
  return es.eigenvalues();
}

// Cut and volume straight from the definition, by edge scan.
inline double brute_conductance(const RegularGraph& g, const std::vector<char>& in) {
  long cut = 0, vol = 0, all = long(g.n()) * g.d();
  for (auto [u, v] : g.edges()) cut += in[u] != in[v];
  for (int u = 0; u < g.n(); ++u) vol += in[u] ? g.d() : 0;
  long m = std::min(vol, all - vol);
  return m == 0 ? 0.0 : double(cut) / double(m);
}

// min over nonempty proper S of G{C} of the conductance, by enumeration.
inline double brute_internal(const RegularGraph& g, const std::vector<int>& members) {
  const int m = int(members.size());
  std::vector<int> local(g.n(), -1);
  for (int i = 0; i < m; ++i) local[members[i]] = i;
  double best = 1.0;
  if (m == 1) return 1.0;
  for (std::uint32_t s = 1; s + 1 < (1u << m); ++s) {
    long cut = 0;
    for (auto [u, v] : g.edges()) {
      int a = local[u], b = local[v];
      if (a < 0 || b < 0) continue;
      cut += ((s >> a) & 1) != ((s >> b) & 1);
    }
    int sz = __builtin_popcount(s);
    best = std::min(best, double(cut) / (double(g.d()) * std::min(sz, m - sz)));
  }
  return best;
}

}  // namespace fx
