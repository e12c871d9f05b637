#include "specside/graph.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "specside/errors.hpp"
#include "specside/spectral.hpp"

namespace specside {

RegularGraph::RegularGraph(int n, int d,
                           const std::vector<std::pair<int, int>>& edges,
                           std::vector<int> self_loops)
    : n_(n), d_(d), loops_(std::move(self_loops)) {
  if (n < 1 || d < 1) throw DomainError("graph needs n >= 1 and d >= 1");
  if (int(loops_.size()) != n) throw DomainError("self-loop vector has wrong length");
  edges_.reserve(edges.size());
  for (auto [u, v] : edges) {
    if (u < 0 || v < 0 || u >= n || v >= n) throw DomainError("edge endpoint out of range");
    if (u == v) throw DomainError("self-edge stored as edge; use self-loop counts");
    edges_.emplace_back(std::min(u, v), std::max(u, v));
  }
  std::sort(edges_.begin(), edges_.end());
  if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end())
    throw DomainError("duplicate edge");

  std::vector<int> deg(n, 0);
  for (auto [u, v] : edges_) ++deg[u], ++deg[v];
  for (int u = 0; u < n; ++u) {
    if (loops_[u] < 0) throw DomainError("negative self-loop count");
    if (deg[u] + loops_[u] != d)
      throw DomainError("vertex " + std::to_string(u) + " has degree " +
                        std::to_string(deg[u] + loops_[u]) + " != d");
  }
  off_.assign(n + 1, 0);
  for (int u = 0; u < n; ++u) off_[u + 1] = off_[u] + deg[u];
  adj_.resize(off_[n]);
  eid_.resize(off_[n]);
  std::vector<int> fill(off_.begin(), off_.end() - 1);
  // Edges are sorted, so each row is written in increasing neighbor order
  // for the smaller endpoint; the larger endpoint's rows are sorted below.
  for (int e = 0; e < int(edges_.size()); ++e) {
    auto [u, v] = edges_[e];
    adj_[fill[u]] = v, eid_[fill[u]++] = e;
    adj_[fill[v]] = u, eid_[fill[v]++] = e;
  }
  std::vector<std::pair<int, int>> row;
  for (int u = 0; u < n; ++u) {
    row.clear();
    for (int s = off_[u]; s < off_[u + 1]; ++s) row.emplace_back(adj_[s], eid_[s]);
    std::sort(row.begin(), row.end());
    for (int s = off_[u]; s < off_[u + 1]; ++s)
      adj_[s] = row[s - off_[u]].first, eid_[s] = row[s - off_[u]].second;
  }
}

bool RegularGraph::has_edge(Vertex u, Vertex v) const {
  auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::uint64_t RegularGraph::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto put = [&h](std::uint64_t x) {
    for (int i = 0; i < 8; ++i) {
      h ^= (x >> (8 * i)) & 0xff;
      h *= 1099511628211ULL;
    }
  };
  put(n_), put(d_);
  for (int l : loops_) put(l);
  for (auto [u, v] : edges_) put(u), put(v);
  return h;
}

std::pair<RegularGraph, std::vector<Vertex>> induced_regular(
    const RegularGraph& g, std::span<const Vertex> members) {
  std::vector<int> local(g.n(), -1);
  std::vector<Vertex> back(members.begin(), members.end());
  for (int i = 0; i < int(back.size()); ++i) local[back[i]] = i;
  std::vector<std::pair<int, int>> edges;
  std::vector<int> loops(back.size(), g.d());
  for (int i = 0; i < int(back.size()); ++i)
    for (Vertex w : g.neighbors(back[i]))
      if (local[w] >= 0) {
        --loops[i];
        if (local[w] > i) edges.emplace_back(i, local[w]);
      }
  return {RegularGraph(int(back.size()), g.d(), edges, std::move(loops)),
          std::move(back)};
}

EdgeWeighting::EdgeWeighting(const RegularGraph& g, std::vector<double> x)
    : d_(g.d()), x_(std::move(x)) {
  if (int(x_.size()) != g.num_edges()) throw DomainError("weighting size mismatch");
  for (double v : x_)
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("edge weight outside [0,1]");
}

double EdgeWeighting::loop_mass(const RegularGraph& g, Vertex v) const {
  double s = 0.0;
  for (int e : g.incident_edges(v)) s += x_[e];
  return d_ - s;
}

CutRatio conductance(const RegularGraph& g, const std::vector<char>& in_set) {
  std::int64_t size = 0;
  for (Vertex u = 0; u < g.n(); ++u) size += in_set[u] != 0;
  if (size == 0 || size == g.n())
    throw DomainError("conductance needs a nonempty proper subset");
  CutRatio r;
  for (auto [u, v] : g.edges()) r.cut += (in_set[u] != 0) != (in_set[v] != 0);
  r.volume = std::int64_t(g.d()) * std::min(size, g.n() - size);
  return r;
}

CutRatio conductance(const RegularGraph& g, std::span<const Vertex> set) {
  std::vector<char> mask(g.n(), 0);
  for (Vertex u : set) mask.at(u) = 1;
  return conductance(g, mask);
}

namespace {

double exhaustive_min_conductance(const RegularGraph& h) {
  const int m = h.n();
  if (m == 1) return 1.0;
  double best = std::numeric_limits<double>::infinity();
  const std::uint32_t full = (1u << m) - 1;
  std::vector<int> cut(std::size_t(1) << m, 0);
  for (std::uint32_t s = 1; s < full; ++s) {
    int v = std::countr_zero(s);
    std::uint32_t rest = s & (s - 1);
    int inside = 0;
    for (Vertex w : h.neighbors(v)) inside += (rest >> w) & 1;
    cut[s] = cut[rest] + int(h.neighbors(v).size()) - 2 * inside;
    int sz = std::popcount(s);
    best = std::min(best, double(cut[s]) / (double(h.d()) * std::min(sz, m - sz)));
  }
  return best;
}

}  // namespace

ConductanceBound internal_conductance_bound(const RegularGraph& g,
                                            std::span<const Vertex> members) {
  if (members.empty()) throw DomainError("empty cluster");
  auto [h, back] = induced_regular(g, members);
  if (h.n() <= 14) return {exhaustive_min_conductance(h), "exhaustive"};
  auto eig = smallest_laplacian_eigenvalues(h, 2);
  return {std::max(0.0, eig[1]) / 2.0, "cheeger"};
}

std::vector<std::vector<Vertex>> clusters_of(const Labeling& labels, int k) {
  std::vector<std::vector<Vertex>> out(k);
  for (Vertex u = 0; u < int(labels.size()); ++u) {
    if (labels[u] < 0 || labels[u] >= k) throw DomainError("label out of range");
    out[labels[u]].push_back(u);
  }
  return out;
}

int num_labels(const Labeling& labels) {
  return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
}

RegularGraph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open " + path);
  std::string line, tag;
  int lineno = 0, n = -1, d = -1;
  std::vector<int> loops, vline;
  std::vector<std::pair<int, int>> edges;
  std::vector<int> deg;
  std::unordered_set<std::int64_t> seen;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    if (!(ss >> tag) || tag[0] == '#') continue;
    auto read_int = [&](int& x) {
      if (!(ss >> x)) throw ParseError(lineno, "malformed '" + tag + "' line");
    };
    if (tag == "graph") {
      if (n >= 0) throw ParseError(lineno, "duplicate header");
      read_int(n), read_int(d);
      if (n < 1 || d < 1) throw ParseError(lineno, "header needs n >= 1, d >= 1");
      loops.assign(n, -1), vline.assign(n, 0), deg.assign(n, 0);
    } else if (n < 0) {
      throw ParseError(lineno, "expected 'graph <n> <d>' header first");
    } else if (tag == "v") {
      int id, l;
      read_int(id), read_int(l);
      if (id < 0 || id >= n) throw ParseError(lineno, "vertex id out of range");
      if (loops[id] >= 0) throw ParseError(lineno, "vertex listed twice");
      if (l < 0) throw ParseError(lineno, "negative self-loop count");
      loops[id] = l, vline[id] = lineno;
    } else if (tag == "e") {
      int u, v;
      read_int(u), read_int(v);
      if (u < 0 || v < 0 || u >= n || v >= n) throw ParseError(lineno, "edge endpoint out of range");
      if (u >= v) throw ParseError(lineno, "edge must be written with u < v");
      if (!seen.insert(std::int64_t(u) * n + v).second)
        throw ParseError(lineno, "duplicate edge");
      edges.emplace_back(u, v);
      ++deg[u], ++deg[v];
      if (deg[u] > d || deg[v] > d) throw ParseError(lineno, "degree exceeds d");
    } else {
      throw ParseError(lineno, "unknown record '" + tag + "'");
    }
    std::string extra;
    if (ss >> extra) throw ParseError(lineno, "trailing tokens");
  }
  if (n < 0) throw ParseError(lineno, "missing header");
  for (int u = 0; u < n; ++u) {
    if (loops[u] < 0) throw ParseError(lineno, "vertex " + std::to_string(u) + " missing");
    if (deg[u] + loops[u] != d)
      throw ParseError(vline[u], "vertex " + std::to_string(u) + " has degree " +
                                     std::to_string(deg[u] + loops[u]) + " != " +
                                     std::to_string(d));
  }
  return RegularGraph(n, d, edges, loops);
}

void save_graph(const RegularGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "graph " << g.n() << ' ' << g.d() << '\n';
  for (Vertex u = 0; u < g.n(); ++u) out << "v " << u << ' ' << g.self_loops(u) << '\n';
  for (auto [u, v] : g.edges()) out << "e " << u << ' ' << v << '\n';
}

Labeling load_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open " + path);
  Labeling out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    int id;
    if (!(ss >> id)) {
      std::string tok;
      std::istringstream again(line);
      if (again >> tok) throw ParseError(lineno, "expected a cluster id");
      continue;
    }
    if (id < 1) throw ParseError(lineno, "cluster ids are 1-based");
    out.push_back(id - 1);
  }
  return out;
}

void save_labels(const Labeling& labels, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  for (int l : labels) out << l + 1 << '\n';
}

EdgeWeighting load_weighting(const RegularGraph& g, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open " + path);
  std::vector<double> x(g.num_edges(), 1.0);
  std::string line, tag;
  int lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    if (!(ss >> tag) || tag[0] == '#') continue;
    if (tag == "weights") {
      int n, d;
      if (!(ss >> n >> d)) throw ParseError(lineno, "malformed header");
      if (n != g.n() || d != g.d()) throw ParseError(lineno, "header does not match graph");
      header = true;
    } else if (tag == "w") {
      if (!header) throw ParseError(lineno, "missing 'weights' header");
      int u, v;
      double w;
      if (!(ss >> u >> v >> w)) throw ParseError(lineno, "malformed 'w' line");
      if (u < 0 || v < 0 || u >= g.n() || v >= g.n() || u >= v)
        throw ParseError(lineno, "bad edge endpoints");
      auto nb = g.neighbors(u);
      auto it = std::lower_bound(nb.begin(), nb.end(), v);
      if (it == nb.end() || *it != v) throw ParseError(lineno, "not an edge of the graph");
      if (!(w >= 0.0 && w <= 1.0)) throw ParseError(lineno, "weight outside [0,1]");
      x[g.incident_edges(u)[it - nb.begin()]] = w;
    } else {
      throw ParseError(lineno, "unknown record '" + tag + "'");
    }
  }
  if (!header) throw ParseError(lineno, "missing 'weights' header");
  return EdgeWeighting(g, std::move(x));
}

void save_weighting(const RegularGraph& g, const EdgeWeighting& w,
                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "weights " << g.n() << ' ' << g.d() << '\n' << std::setprecision(17);
  for (int e = 0; e < g.num_edges(); ++e)
    out << "w " << g.edges()[e].first << ' ' << g.edges()[e].second << ' ' << w[e] << '\n';
}

}  // namespace specside
