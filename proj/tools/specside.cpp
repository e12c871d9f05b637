// Command-line front end: generate, classify, refine, sweep, verify-invariants.
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "specside/classify.hpp"
#include "specside/errors.hpp"
#include "specside/generate.hpp"
#include "specside/harness.hpp"
#include "specside/oracle.hpp"
#include "specside/refine.hpp"
#include "specside/rng.hpp"
#include "specside/spectral.hpp"

using namespace specside;
using nlohmann::json;

namespace {

constexpr int kOk = 0, kFail = 1, kConfig = 2, kInvariant = 3;

struct StrictWarnings : Error {
  using Error::Error;
};

void warn(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

// Emits warnings; in strict mode the first one aborts with exit code 3.
void report_warnings(const std::vector<std::string>& ws, bool strict) {
  for (const auto& w : ws) warn(w);
  if (strict && !ws.empty()) throw StrictWarnings(std::to_string(ws.size()) + " setting constraint(s) violated");
}

struct Derived {
  double phi = 0.0, eta = 1.0, eps = 0.0;
};

// (eps, phi, eta) of a known clustering, measured the same way the generator does.
Derived measure(const RegularGraph& g, const Labeling& iota, int k) {
  Derived d;
  auto cl = clusters_of(iota, k);
  std::size_t lo = g.n(), hi = 0;
  d.phi = INFINITY;
  for (const auto& c : cl) {
    if (c.empty()) throw DomainError("empty cluster in labeling");
    lo = std::min(lo, c.size()), hi = std::max(hi, c.size());
    if (int(c.size()) < g.n()) d.eps = std::max(d.eps, conductance(g, c).value());
    d.phi = std::min(d.phi, internal_conductance_bound(g, c).bound);
  }
  d.eta = double(hi) / double(lo);
  return d;
}

json instance_meta(const PlantedInstance& inst, std::uint64_t seed) {
  return {{"generator", inst.generator}, {"n", inst.graph.n()},       {"d", inst.graph.d()},
          {"k", inst.k},                 {"seed", seed},              {"eps_measured", inst.eps_measured},
          {"phi_certified", inst.phi_certified}, {"phi_method", inst.phi_method},
          {"eta", inst.eta},             {"middle_size", std::count(inst.middle.begin(), inst.middle.end(), 1)},
          {"graph_hash", inst.graph.hash()}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral clustering with noisy label side information"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Build a planted instance");
  std::string gen_kind = "planted", gen_graph, gen_labels, gen_meta;
  int gen_n = 0, gen_k = 2, gen_d = 0;
  double gen_eps = 0.0, gen_eta = 1.0;
  std::uint64_t gen_seed = 1;
  gen->add_option("--kind", gen_kind)->check(CLI::IsMember({"planted", "uninformative_middle"}));
  gen->add_option("--n", gen_n)->required();
  gen->add_option("--k", gen_k);
  gen->add_option("--d", gen_d)->required();
  gen->add_option("--eps", gen_eps, "target eps (planted) or middle fraction");
  gen->add_option("--eta", gen_eta);
  gen->add_option("--seed", gen_seed);
  gen->add_option("--graph", gen_graph, "output graph file")->required();
  gen->add_option("--labels", gen_labels, "output ground-truth labels")->required();
  gen->add_option("--meta", gen_meta, "output JSON metadata");

  // classify
  auto* cls = app.add_subcommand("classify", "Classify every vertex of a graph");
  std::string c_graph, c_sigma, c_truth, c_out, c_prov, c_classifier = "polytime",
                                                     c_backend = "exact", c_mode = "uniform_wrong";
  int c_k = 0;
  double c_delta = 0.0;
  std::optional<double> c_phi, c_eta, c_xi;
  std::uint64_t c_seed = 1;
  bool c_strict = false;
  cls->add_option("--graph", c_graph)->required();
  cls->add_option("--sigma", c_sigma, "observed labels; drawn from --truth when omitted");
  cls->add_option("--truth", c_truth, "ground-truth labels (derives phi, eta and the rate)");
  cls->add_option("--k", c_k)->required();
  cls->add_option("--delta", c_delta, "label noise rate (walk length, perturbation)");
  cls->add_option("--phi", c_phi);
  cls->add_option("--eta", c_eta);
  cls->add_option("--classifier", c_classifier)->check(CLI::IsMember(known_classifiers()));
  cls->add_option("--backend", c_backend)->check(CLI::IsMember({"exact", "noisy"}));
  cls->add_option("--xi", c_xi);
  cls->add_option("--label-mode", c_mode);
  cls->add_option("--seed", c_seed);
  cls->add_option("--out", c_out, "output labels file")->required();
  cls->add_option("--provenance", c_prov, "per-vertex CSV (vertex,label,provenance,crossing_walks)");
  cls->add_flag("--strict", c_strict);

  // refine
  auto* ref = app.add_subcommand("refine", "Reweight edges and repair a clustering");
  std::string r_graph, r_alpha, r_truth, r_weights, r_labels, r_report;
  int r_k = 0;
  std::optional<double> r_phi, r_eta;
  SdpOptions r_opt;
  bool r_strict = false;
  ref->add_option("--graph", r_graph)->required();
  ref->add_option("--alpha", r_alpha, "input clustering to refine")->required();
  ref->add_option("--truth", r_truth, "ground truth for the evaluation report");
  ref->add_option("--k", r_k)->required();
  ref->add_option("--phi", r_phi);
  ref->add_option("--eta", r_eta);
  ref->add_option("--max-iter", r_opt.max_iter);
  ref->add_option("--tol", r_opt.tol);
  ref->add_option("--weights", r_weights, "output weighting file")->required();
  ref->add_option("--labels", r_labels, "output refined labels");
  ref->add_option("--report", r_report, "output JSON report");
  ref->add_flag("--strict", r_strict, "non-converged solver exits with code 3");

  // sweep
  auto* sw = app.add_subcommand("sweep", "Run an (eps, delta, seed, classifier) sweep");
  std::string s_config, s_out;
  sw->add_option("--config", s_config)->required();
  sw->add_option("--out", s_out, "CSV path (overrides config output; '-' for stdout)");

  // verify-invariants
  auto* vi = app.add_subcommand("verify-invariants", "Check structural and spectral invariants");
  std::string v_graph, v_labels;
  int v_k = 0;
  vi->add_option("--graph", v_graph)->required();
  vi->add_option("--labels", v_labels, "ground-truth clustering");
  vi->add_option("--k", v_k);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfig;
  }

  try {
    if (*gen) {
      PlantedInstance inst = gen_kind == "planted"
                                 ? generate_planted(gen_n, gen_k, gen_d, gen_eps, gen_eta, gen_seed)
                                 : generate_uninformative_middle(gen_n, gen_d, gen_eps, gen_seed);
      save_graph(inst.graph, gen_graph);
      save_labels(inst.iota, gen_labels);
      json meta = instance_meta(inst, gen_seed);
      if (!gen_meta.empty()) {
        std::ofstream(gen_meta) << meta.dump(2) << '\n';
      }
      std::cout << meta.dump() << '\n';
      return kOk;
    }

    if (*cls) {
      RegularGraph g = load_graph(c_graph);
      std::optional<Labeling> truth;
      if (!c_truth.empty()) truth = load_labels(c_truth);
      Labeling sigma;
      if (!c_sigma.empty())
        sigma = load_labels(c_sigma);
      else if (truth)
        sigma = perturb_labels(*truth, c_k, c_delta, parse_label_noise(c_mode), c_seed);
      else
        throw ParameterError("classify needs --sigma or --truth");
      if (int(sigma.size()) != g.n()) throw ParameterError("label count does not match graph");
      for (int l : sigma)
        if (l >= c_k) throw ParameterError("label exceeds --k");
      Derived m;
      if (truth) m = measure(g, *truth, c_k);
      const double phi = c_phi.value_or(m.phi), eta = c_eta.value_or(m.eta);
      if (!(phi > 0.0)) throw ParameterError("phi unknown or zero; pass --phi or --truth");

      SpectralEmbedding emb = embed(g, c_k);
      SettingInputs si{g.n(), c_k, g.d(), m.eps, phi, eta, c_delta, 0.0};
      double xi = c_xi.value_or(default_xi(g.n()));
      si.xi = xi;
      if (truth) {
        auto means = cluster_means(emb, *truth, c_k);
        for (const auto& mu : means.means) si.min_mean_sq = std::min(si.min_mean_sq, mu.squaredNorm());
      }
      report_warnings(setting_warnings(si), c_strict);

      auto oracle = make_oracle(emb.basis, parse_oracle_backend(c_backend), xi,
                                derive_seed(c_seed, stream::oracle_noise));
      ApproxMeans am = build_approx_means(*oracle, sigma, c_k, eta, phi,
                                          derive_seed(c_seed, stream::means));
      SpectralLabeler tau(*oracle, am, phi, eta);
      ClassifierOutput out;
      out.labels.resize(g.n());
      out.provenance.assign(g.n(), Provenance::agree);
      out.crossing_walks.assign(g.n(), -1);
      if (c_classifier == "polytime") {
        out = classify_all_polytime(g, sigma, tau);
      } else if (c_classifier == "walk") {
        out = classify_all_walk(g, sigma, tau, walk_length(phi, c_delta, g.n()),
                                derive_seed(c_seed, stream::walks));
      } else {
        for (Vertex u = 0; u < g.n(); ++u) {
          int l = c_classifier == "labels"           ? sigma[u]
                  : c_classifier == "naive_spectral" ? baseline_naive_spectral(tau, sigma, u)
                  : c_classifier == "majority"       ? baseline_majority(g, sigma, c_k, u)
                                                     : baseline_majority_pp(g, sigma, c_k, phi, u);
          out.labels[u] = l;
        }
      }
      save_labels(out.labels, c_out);
      if (!c_prov.empty()) {
        std::ofstream p(c_prov);
        p << "vertex,label,provenance,crossing_walks\n";
        const bool branches = c_classifier == "polytime" || c_classifier == "walk";
        for (Vertex u = 0; u < g.n(); ++u)
          p << u << ',' << out.labels[u] + 1 << ',' << (branches ? to_string(out.provenance[u]) : "")
            << ',' << out.crossing_walks[u] << '\n';
      }
      json summary = {{"classifier", c_classifier}, {"phi", phi}, {"eta", eta}, {"xi", xi}};
      if (truth) {
        summary["rate"] = misclassification(out.labels, *truth);
        summary["matched_rate"] = matched_misclassification(out.labels, *truth, c_k);
      }
      std::cout << summary.dump() << '\n';
      return kOk;
    }

    if (*ref) {
      RegularGraph g = load_graph(r_graph);
      Labeling alpha = load_labels(r_alpha);
      std::optional<Labeling> truth;
      if (!r_truth.empty()) truth = load_labels(r_truth);
      Derived m;
      if (truth) m = measure(g, *truth, r_k);
      const double phi = r_phi.value_or(m.phi), eta = r_eta.value_or(m.eta);
      if (!(phi > 0.0)) throw ParameterError("phi unknown or zero; pass --phi or --truth");
      json rep;
      EdgeWeighting x;
      Labeling refined;
      bool converged = false;
      if (truth) {
        RefineReport r = refine_pipeline(g, *truth, alpha, phi, eta, r_k, r_opt);
        x = r.sdp.x;
        refined = r.partition.clusters;
        converged = r.sdp.converged;
        rep = {{"gamma", r.gamma},
               {"in_regime", r.in_regime},
               {"cross_weight_truth", r.cross_weight_truth},
               {"symmetric_difference", r.symmetric_difference},
               {"lambda_k1", r.lambda_k1}};
        if (!r.in_regime) warn("gamma above phi^3/(100 eta k); bounds not expected to hold");
        rep["objective"] = r.sdp.objective;
        rep["certified_min_eig"] = r.sdp.certified_min_eig;
        rep["iterations"] = r.sdp.iterations;
        rep["restored"] = r.sdp.restored;
        rep["conductance_lower"] = r.partition.conductance_lower;
        rep["moves"] = r.partition.moves;
      } else {
        auto sol = sdp_reweight(g, flag_edges(g, alpha), r_k, phi * phi / 5.0, r_opt);
        auto part = repair_partition(g, sol.x, alpha, phi, r_k);
        x = sol.x;
        refined = part.clusters;
        converged = sol.converged;
        rep = {{"objective", sol.objective},
               {"certified_min_eig", sol.certified_min_eig},
               {"iterations", sol.iterations},
               {"restored", sol.restored},
               {"conductance_lower", part.conductance_lower},
               {"moves", part.moves}};
      }
      rep["converged"] = converged;
      rep["theta"] = phi * phi / 5.0;
      save_weighting(g, x, r_weights);
      if (!r_labels.empty()) save_labels(refined, r_labels);
      if (!r_report.empty()) std::ofstream(r_report) << rep.dump(2) << '\n';
      std::cout << rep.dump() << '\n';
      if (!converged) {
        warn("solver did not converge");
        if (r_strict) return kInvariant;
      }
      return kOk;
    }

    if (*sw) {
      ExperimentConfig cfg = load_config(s_config);
      if (!s_out.empty()) cfg.output = s_out;
      SweepOutput out = run_sweep(cfg);
      report_warnings(out.warnings, cfg.strict);
      int failed = 0;
      for (const auto& r : out.rows) failed += !r.error.empty();
      if (failed) warn(std::to_string(failed) + " row(s) carry an error tag");
      if (cfg.output.empty() || cfg.output == "-") {
        write_csv(out.rows, std::cout);
      } else {
        std::ofstream f(cfg.output);
        if (!f) throw ParameterError("cannot write '" + cfg.output + "'");
        write_csv(out.rows, f);
      }
      return kOk;
    }

    if (*vi) {
      RegularGraph g = load_graph(v_graph);  // validates structure
      std::vector<std::string> bad;
      std::cout << "structure: ok (n=" << g.n() << ", d=" << g.d() << ")\n";
      if (!v_labels.empty()) {
        Labeling iota = load_labels(v_labels);
        if (int(iota.size()) != g.n()) throw ParameterError("label count does not match graph");
        const int k = v_k > 0 ? v_k : num_labels(iota);
        if (k >= g.n()) throw ParameterError("need k < n");
        Derived m = measure(g, iota, k);
        SpectralEmbedding emb = embed(g, k);
        const double lk = emb.eigenvalues[k - 1], lk1 = emb.eigenvalues[k];
        constexpr double slack = 1e-9;
        if (lk > 2.0 * m.eps + slack) bad.push_back("lambda_k > 2 eps");
        if (lk1 < m.phi * m.phi / 2.0 - slack) bad.push_back("lambda_{k+1} < phi^2/2");
        for (Vertex v = 0; v < g.n(); ++v)
          if (neighbor_average_deviation(g, emb, v) >
              2.0 * m.eps * emb.basis.row(v).norm() + slack) {
            bad.push_back("neighbor-average bound fails at vertex " + std::to_string(v));
            break;
          }
        if (m.eps > 0.0 && m.phi > 0.0) {
          auto means = cluster_means(emb, iota, k);
          auto vc = variance_bound_check(emb, means, iota, m.eps, m.phi, 50, 1);
          if (vc.max_ratio > 1.0) bad.push_back("variance bound exceeded");
        }
        std::cout << "eps=" << m.eps << " phi=" << m.phi << " eta=" << m.eta
                  << " lambda_k=" << lk << " lambda_k+1=" << lk1 << '\n';
      }
      for (const auto& b : bad) std::cerr << "violation: " << b << '\n';
      return bad.empty() ? kOk : kInvariant;
    }
  } catch (const StrictWarnings& e) {
    std::cerr << "error: strict mode: " << e.what() << '\n';
    return kInvariant;
  } catch (const InvariantViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvariant;
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFail;
  }
  return kFail;
}
