#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace specside {

using Vertex = int;
// Cluster ids are 0-based in memory and 1-based in label files.
using Labeling = std::vector<int>;

// d-regular undirected graph; missing degree is carried by self-loops.
class RegularGraph {
 public:
  RegularGraph() = default;
  // Throws DomainError on any invariant violation.
  RegularGraph(int n, int d, const std::vector<std::pair<int, int>>& edges,
               std::vector<int> self_loops);

  int n() const { return n_; }
  int d() const { return d_; }
  int num_edges() const { return int(edges_.size()); }

  std::span<const int> neighbors(Vertex u) const {
    return {adj_.data() + off_[u], adj_.data() + off_[u + 1]};
  }
  // Edge id of each adjacency slot, aligned with neighbors(u).
  std::span<const int> incident_edges(Vertex u) const {
    return {eid_.data() + off_[u], eid_.data() + off_[u + 1]};
  }
  int self_loops(Vertex u) const { return loops_[u]; }
  const std::vector<int>& self_loops() const { return loops_; }
  // Sorted (u < v) lexicographically; edge ids index this list.
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

  bool has_edge(Vertex u, Vertex v) const;
  std::uint64_t hash() const;

 private:
  int n_ = 0;
  int d_ = 0;
  std::vector<int> off_{0};
  std::vector<int> adj_;
  std::vector<int> eid_;
  std::vector<int> loops_;
  std::vector<std::pair<int, int>> edges_;
};

// Induced subgraph G{C}: edges leaving C become self-loops so degrees stay d.
// Returns the subgraph and the map local index -> original vertex.
std::pair<RegularGraph, std::vector<Vertex>> induced_regular(
    const RegularGraph& g, std::span<const Vertex> members);

// Per-edge weights in [0,1]; loop mass l'(v) = d - sum of incident weights.
class EdgeWeighting {
 public:
  EdgeWeighting() = default;
  explicit EdgeWeighting(const RegularGraph& g)
      : d_(g.d()), x_(g.num_edges(), 1.0) {}
  EdgeWeighting(const RegularGraph& g, std::vector<double> x);

  double operator[](int e) const { return x_[e]; }
  double& operator[](int e) { return x_[e]; }
  const std::vector<double>& values() const { return x_; }
  std::size_t size() const { return x_.size(); }
  double loop_mass(const RegularGraph& g, Vertex v) const;

 private:
  int d_ = 0;
  std::vector<double> x_;
};

struct PlantedInstance {
  RegularGraph graph;
  Labeling iota;
  int k = 0;
  double eps_measured = 0.0;
  double phi_certified = 0.0;
  std::string phi_method;
  double eta = 1.0;
  std::string generator;
  // Uninformative-middle preset only: membership mask of M (empty otherwise).
  std::vector<char> middle;
};

struct CutRatio {
  std::int64_t cut = 0;
  std::int64_t volume = 0;
  double value() const { return volume == 0 ? 0.0 : double(cut) / double(volume); }
};

// |E(S, V\S)| / min(vol S, vol V\S). `in_set` is a membership mask.
CutRatio conductance(const RegularGraph& g, const std::vector<char>& in_set);
CutRatio conductance(const RegularGraph& g, std::span<const Vertex> set);

struct ConductanceBound {
  double bound = 0.0;
  std::string method;  // "exhaustive" or "cheeger"
};

ConductanceBound internal_conductance_bound(const RegularGraph& g,
                                            std::span<const Vertex> members);

std::vector<std::vector<Vertex>> clusters_of(const Labeling& labels, int k);
int num_labels(const Labeling& labels);

RegularGraph load_graph(const std::string& path);
void save_graph(const RegularGraph& g, const std::string& path);
Labeling load_labels(const std::string& path);
void save_labels(const Labeling& labels, const std::string& path);
EdgeWeighting load_weighting(const RegularGraph& g, const std::string& path);
void save_weighting(const RegularGraph& g, const EdgeWeighting& w,
                    const std::string& path);

}  // namespace specside
