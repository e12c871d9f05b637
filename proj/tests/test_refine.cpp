#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "specside/classify.hpp"
#include "specside/errors.hpp"
#include "specside/generate.hpp"
#include "specside/refine.hpp"

using namespace specside;

namespace {

// Two K6 blocks joined by a perfect matching on their first three vertices.
PlantedInstance barbell() {
  fx::Edges e;
  for (int b = 0; b < 2; ++b)
    for (int u = 0; u < 6; ++u)
      for (int v = u + 1; v < 6; ++v) e.emplace_back(6 * b + u, 6 * b + v);
  for (int u = 0; u < 3; ++u) e.emplace_back(u, 6 + u);
  PlantedInstance inst;
  inst.graph = fx::with_loops(12, 6, e);
  inst.iota = fx::clique_labels(6, 2);
  inst.k = 2;
  std::vector<Vertex> c = {0, 1, 2, 3, 4, 5};
  inst.phi_certified = internal_conductance_bound(inst.graph, c).bound;
  return inst;
}

}  // namespace

TEST_CASE("flag_edges") {
  auto g = fx::cliques(5, 2);
  auto none = flag_edges(g, fx::clique_labels(5, 2));
  CHECK(none.flagged.empty());
  CHECK(int(none.kept.size()) == g.num_edges());
  CHECK(flag_edges(g, Labeling(10, 1)).flagged.empty());

  auto inst = generate_planted(1000, 2, 12, 0.02, 1.0, 7);
  const int bad = 10;
  auto alpha = corrupt_labels(inst.iota, 2, bad, 3);
  CHECK(misclassification(alpha, inst.iota) == doctest::Approx(bad / 1000.0));
  auto f = flag_edges(inst.graph, alpha);
  CHECK(f.flagged.size() + f.kept.size() == std::size_t(inst.graph.num_edges()));
  int symdiff = 0;
  for (int e = 0; e < inst.graph.num_edges(); ++e) {
    auto [u, v] = inst.graph.edges()[e];
    bool cross = inst.iota[u] != inst.iota[v];
    CHECK(bool(f.is_flagged[e]) == (alpha[u] != alpha[v]));
    symdiff += cross != bool(f.is_flagged[e]);
  }
  CHECK(symdiff <= inst.graph.d() * bad);
}

TEST_CASE("corrupt_labels touches exactly count vertices") {
  Labeling iota = fx::clique_labels(50, 3);
  for (int count : {0, 1, 17, 150}) {
    auto a = corrupt_labels(iota, 3, count, 9);
    int wrong = 0;
    for (std::size_t u = 0; u < iota.size(); ++u) wrong += a[u] != iota[u];
    CHECK(wrong == count);
    CHECK(a == corrupt_labels(iota, 3, count, 9));
  }
  CHECK_THROWS_AS(corrupt_labels(iota, 3, 151, 1), DomainError);
}

TEST_CASE("sdp_reweight with nothing flagged keeps every weight") {
  auto inst = barbell();
  auto sol = sdp_reweight(inst.graph, flag_edges(inst.graph, Labeling(12, 0)), 2,
                          inst.phi_certified * inst.phi_certified / 5);
  CHECK(sol.objective == 0.0);
  CHECK(sol.converged);
  for (double w : sol.x.values()) CHECK(w == 1.0);
  CHECK(sol.certified_min_eig >= 0.0);
}

TEST_CASE("sdp_reweight on a corrupted generated instance") {
  auto inst = generate_planted(600, 2, 10, 0.03, 1.0, 4);
  const double phi = inst.phi_certified, theta = phi * phi / 5;
  const int bad = 6;
  auto alpha = corrupt_labels(inst.iota, 2, bad, 4);
  auto f = flag_edges(inst.graph, alpha);
  auto emb = embed(inst.graph, 2);

  // The ground-truth witness drops flagged crossing edges and stays feasible.
  std::vector<double> w(inst.graph.num_edges(), 1.0);
  for (int e : f.flagged) {
    auto [u, v] = inst.graph.edges()[e];
    if (inst.iota[u] != inst.iota[v]) w[e] = 0.0;
  }
  EdgeWeighting witness(inst.graph, w);
  CHECK(projected_min_eig(inst.graph, witness, emb.basis, theta) >= -1e-8);

  SdpOptions opt;
  opt.projector_basis = emb.basis;
  auto sol = sdp_reweight(inst.graph, f, 2, theta, opt);
  for (int e = 0; e < inst.graph.num_edges(); ++e) {
    CHECK(sol.x[e] >= 0.0);
    CHECK(sol.x[e] <= 1.0);
    if (!f.is_flagged[e]) CHECK(sol.x[e] == 1.0);
  }
  CHECK(sol.certified_min_eig >= -opt.feas_tol);
  CHECK(sol.certified_min_eig ==
        doctest::Approx(projected_min_eig(inst.graph, sol.x, emb.basis, theta)).epsilon(1e-6));
  const double dgn = inst.graph.d() * double(bad);
  CHECK(sol.objective <= 1.1 * dgn + opt.tol * dgn);
  if (sol.converged) CHECK(weighted_eigenvalue(inst.graph, sol.x, 2) >= theta - 1e-6);

  // Penalized value never increases between rho changes (NaN marks a change).
  const auto& h = sol.accepted_penalized;
  REQUIRE(!h.empty());
  for (std::size_t i = 1; i < h.size(); ++i)
    if (!std::isnan(h[i]) && !std::isnan(h[i - 1])) CHECK(h[i] <= h[i - 1]);
}

TEST_CASE("repair_partition on the ground truth is the identity") {
  auto inst = barbell();
  auto rp = repair_partition(inst.graph, EdgeWeighting(inst.graph), inst.iota,
                             inst.phi_certified, 2);
  CHECK(rp.clusters == inst.iota);
  CHECK(rp.moves == 0);
  for (const auto& x : rp.removed) CHECK(x.empty());
  CHECK(rp.cross_weight == doctest::Approx(3.0));
  for (double c : rp.conductance_lower) CHECK(c > 0.0);

  auto again = repair_partition(inst.graph, EdgeWeighting(inst.graph), inst.iota,
                                inst.phi_certified, 2);
  CHECK(again.clusters == rp.clusters);
}

TEST_CASE("repair_partition pulls a misplaced vertex home") {
  auto inst = barbell();
  Labeling alpha = inst.iota;
  alpha[5] = 1;  // vertex 5 has no matching edge, all its neighbors sit in block 0
  auto rp = repair_partition(inst.graph, EdgeWeighting(inst.graph), alpha, inst.phi_certified, 2);
  CHECK(rp.clusters == inst.iota);
  CHECK(rp.moves >= 1);
}

TEST_CASE("refine_pipeline: alpha equal to the truth, and determinism") {
  auto g = fx::cliques(6, 2);
  auto iota = fx::clique_labels(6, 2);
  auto r = refine_pipeline(g, iota, iota, 0.5, 1.0, 2);
  CHECK(r.gamma == 0.0);
  CHECK(r.in_regime);
  CHECK(r.symmetric_difference == 0);
  CHECK(r.partition.clusters == iota);
  for (double w : r.sdp.x.values()) CHECK(w == 1.0);

  // On the barbell the truth flags exactly the matching, which the solver drops.
  auto bb = barbell();
  auto rb = refine_pipeline(bb.graph, bb.iota, bb.iota, bb.phi_certified, 1.0, 2);
  CHECK(rb.partition.clusters == bb.iota);
  CHECK(rb.sdp.objective <= 3.0);

  auto big = generate_planted(400, 2, 10, 0.03, 1.0, 2);
  auto alpha = corrupt_labels(big.iota, 2, 4, 2);
  auto a = refine_pipeline(big.graph, big.iota, alpha, big.phi_certified, 1.0, 2);
  auto b = refine_pipeline(big.graph, big.iota, alpha, big.phi_certified, 1.0, 2);
  CHECK(a.sdp.x.values() == b.sdp.x.values());
  CHECK(a.partition.clusters == b.partition.clusters);
  CHECK(a.sdp.iterations == b.sdp.iterations);
  CHECK(a.cross_weight_truth == b.cross_weight_truth);
}

TEST_CASE("kway_expansion_bruteforce") {
  auto k4 = fx::cliques(4, 1);
  CHECK(kway_expansion_bruteforce(k4, 2) == doctest::Approx(2.0 / 3.0));
  CHECK(fx::reference_eigenvalues(k4)[1] == doctest::Approx(4.0 / 3.0));
  CHECK(kway_expansion_bruteforce(fx::cliques(3, 2), 2) == 0.0);
  CHECK(kway_expansion_bruteforce(fx::cycle(6), 2) == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(kway_expansion_bruteforce(fx::cycle(13), 2), SizeError);

  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const int n = 5 + int(seed % 6);
    auto g = fx::random_graph(n, 4, 0.5, seed);
    auto ev = fx::reference_eigenvalues(g);
    for (int k : {2, 3}) CHECK(kway_expansion_bruteforce(g, k) >= ev[k - 1] / 2 - 1e-12);
    // k=1 is the plain edge expansion, checked against the mask definition.
    double best = 1.0;
    for (std::uint32_t s = 1; s + 1 < (1u << n); ++s) {
      std::vector<char> in(n);
      for (int u = 0; u < n; ++u) in[u] = (s >> u) & 1;
      best = std::min(best, fx::brute_conductance(g, in));
    }
    CHECK(kway_expansion_bruteforce(g, 1) == doctest::Approx(best));
  }
}
