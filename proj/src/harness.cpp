#include "specside/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "specside/classify.hpp"
#include "specside/errors.hpp"
#include "specside/rng.hpp"
#include "specside/spectral.hpp"

namespace specside {

using nlohmann::json;

const std::vector<std::string>& known_classifiers() {
  static const std::vector<std::string> names = {
      "polytime", "walk", "labels", "naive_spectral", "majority", "majority_pp"};
  return names;
}

namespace {

template <class T>
T get_field(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) throw ParameterError("missing field '" + path + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParameterError("field '" + path + key + "' has the wrong type");
  }
}

template <class T>
T get_or(const json& j, const std::string& key, T fallback, const std::string& path) {
  return j.contains(key) ? get_field<T>(j, key, path) : fallback;
}

std::vector<std::uint64_t> parse_seeds(const json& s) {
  if (s.is_array()) {
    std::vector<std::uint64_t> out;
    for (const auto& v : s) {
      if (!v.is_number_unsigned()) throw ParameterError("field 'seeds' must hold nonnegative integers");
      out.push_back(v.get<std::uint64_t>());
    }
    return out;
  }
  if (s.is_object()) {
    auto count = get_field<int>(s, "count", "seeds.");
    auto start = get_or<std::uint64_t>(s, "start", 1, "seeds.");
    if (count < 1) throw ParameterError("field 'seeds.count' must be positive");
    std::vector<std::uint64_t> out(count);
    for (int i = 0; i < count; ++i) out[i] = start + i;
    return out;
  }
  throw ParameterError("field 'seeds' must be a list or {count, start}");
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParameterError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParameterError("config must be a JSON object");
  ExperimentConfig c;
  if (!j.contains("generator")) throw ParameterError("missing field 'generator'");
  const json& g = j["generator"];
  c.gen.kind = get_or<std::string>(g, "kind", "planted", "generator.");
  if (c.gen.kind != "planted" && c.gen.kind != "uninformative_middle")
    throw ParameterError("unknown generator kind '" + c.gen.kind + "'");
  c.gen.n = get_field<int>(g, "n", "generator.");
  c.gen.d = get_field<int>(g, "d", "generator.");
  c.gen.k = c.gen.kind == "planted" ? get_or<int>(g, "k", 2, "generator.") : 2;
  c.gen.eta = get_or<double>(g, "eta", 1.0, "generator.");
  if (g.contains("eps") && g["eps"].is_number())
    c.gen.eps = {g["eps"].get<double>()};
  else
    c.gen.eps = get_field<std::vector<double>>(g, "eps", "generator.");
  if (c.gen.eps.empty()) throw ParameterError("field 'generator.eps' is empty");

  c.deltas = get_field<std::vector<double>>(j, "deltas", "");
  if (c.deltas.empty()) throw ParameterError("field 'deltas' is empty");
  for (double dl : c.deltas)
    if (!(dl >= 0.0 && dl <= 1.0)) throw ParameterError("deltas must lie in [0,1]");
  if (!j.contains("seeds")) throw ParameterError("missing field 'seeds'");
  c.seeds = parse_seeds(j["seeds"]);

  if (j.contains("oracle")) {
    const json& o = j["oracle"];
    c.backend = parse_oracle_backend(get_or<std::string>(o, "backend", "exact", "oracle."));
    if (o.contains("xi")) {
      if (o["xi"].is_number()) {
        c.xi.mode = "value";
        c.xi.value = o["xi"].get<double>();
        if (!(c.xi.value >= 0.0)) throw ParameterError("field 'oracle.xi' must be nonnegative");
      } else if (o["xi"].is_string()) {
        c.xi.mode = o["xi"].get<std::string>();
        if (c.xi.mode != "default" && c.xi.mode != "ceiling")
          throw ParameterError("field 'oracle.xi' must be a number, \"default\" or \"ceiling\"");
      } else {
        throw ParameterError("field 'oracle.xi' has the wrong type");
      }
    }
  }
  c.classifiers = get_field<std::vector<std::string>>(j, "classifiers", "");
  if (c.classifiers.empty()) throw ParameterError("field 'classifiers' is empty");
  for (const auto& name : c.classifiers) {
    const auto& known = known_classifiers();
    if (std::find(known.begin(), known.end(), name) == known.end())
      throw ParameterError("unknown classifier '" + name + "'");
    if (name == "majority_pp" && c.gen.k != 2)
      throw ParameterError("classifier 'majority_pp' needs k = 2");
  }
  c.label_mode = parse_label_noise(get_or<std::string>(j, "label_mode", "uniform_wrong", ""));
  c.strict = get_or<bool>(j, "strict", false, "");
  c.record_runtime = get_or<bool>(j, "record_runtime", false, "");
  c.output = get_or<std::string>(j, "output", "", "");
  c.threads = get_or<int>(j, "threads", 0, "");
  c.cache_dir = get_or<std::string>(j, "cache_dir", "", "");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::vector<std::string> setting_warnings(const SettingInputs& s) {
  std::vector<std::string> w;
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return std::string(buf);
  };
  if (s.d < 3) w.push_back("d >= 3 violated (d=" + std::to_string(s.d) + ")");
  if (s.k < 2) w.push_back("k >= 2 violated");
  if (s.delta * s.d > 0.01)
    w.push_back("delta*d <= 1/100 violated (delta*d=" + fmt(s.delta * s.d) + ")");
  if (s.phi > 0.0) {
    const double eta4 = std::pow(s.eta, 4);
    if (s.eps / std::pow(s.phi, 6) > 1.0 / (1e5 * eta4))
      w.push_back("eps/phi^6 <= 1/(1e5 eta^4) violated (eps=" + fmt(s.eps) +
                  ", phi=" + fmt(s.phi) + ")");
    if (s.phi * s.phi * s.eta >= 1e-3)
      w.push_back("phi^2 eta < 1/1000 violated (phi^2 eta=" + fmt(s.phi * s.phi * s.eta) + ")");
    if (s.eps > 0.0 && s.k * std::log(double(s.k)) > std::pow(s.phi, 6) / (1e9 * eta4 * s.eps))
      w.push_back("k log k <= phi^6/(1e9 eta^4 eps) violated");
    if (std::isfinite(s.min_mean_sq) && s.n > 0 &&
        s.xi / s.n > s.phi * s.phi / (160000.0 * s.eta) * s.min_mean_sq)
      w.push_back("xi/n <= phi^2/(20^4 eta) min ||mu_i||^2 violated (xi=" + fmt(s.xi) + ")");
  } else {
    w.push_back("certified phi is 0; spectral parameters undefined");
  }
  return w;
}

int thread_budget(int requested) {
  int t = requested > 0 ? requested : int(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SPECSIDE_THREADS")) {
    int cap = std::atoi(env);
    if (cap > 0) t = std::min(t, cap);
  }
  return std::max(1, t);
}

namespace {

struct Histogram {
  int agree = 0, ambiguous = 0, impostor = 0, trust = 0;
  void add(Provenance p) {
    switch (p) {
      case Provenance::agree: ++agree; break;
      case Provenance::ambiguous: ++ambiguous; break;
      case Provenance::impostor_trust_label: ++impostor; break;
      case Provenance::trust_spectral: ++trust; break;
    }
  }
};

// Bucket for classifiers without branches: read off (tau, sigma, output).
Provenance relation(int tau, int sigma, int out) {
  if (tau == sigma) return Provenance::agree;
  if (tau == kStar) return Provenance::ambiguous;
  return out == sigma ? Provenance::impostor_trust_label : Provenance::trust_spectral;
}

double middle_rate(const Labeling& out, const Labeling& iota, const std::vector<char>& mid) {
  int m = 0, wrong = 0;
  for (std::size_t u = 0; u < mid.size(); ++u)
    if (mid[u]) ++m, wrong += out[u] != iota[u];
  return m == 0 ? 0.0 : double(wrong) / m;
}

SpectralEmbedding cached_embedding(const RegularGraph& g, int k, const std::string& dir) {
  if (dir.empty()) return embed(g, k);
  const std::string path = embedding_cache_path(dir, g, k);
  SpectralEmbedding e;
  if (load_embedding(path, e) && e.n() == g.n() && e.k() == k) return e;
  e = embed(g, k);
  save_embedding(e, path);
  return e;
}

std::uint64_t delta_key(double delta) { return std::bit_cast<std::uint64_t>(delta); }

// All rows for one (eps, seed) unit, in (delta, classifier) order.
void run_unit(const ExperimentConfig& cfg, double eps, std::uint64_t seed,
              std::vector<SweepResultRow*>& slots, std::vector<std::string>& warnings) {
  const std::size_t nc = cfg.classifiers.size();
  SweepResultRow base;
  base.gen = cfg.gen.kind;
  base.n = cfg.gen.n;
  base.k = cfg.gen.k;
  base.d = cfg.gen.d;
  base.seed = seed;
  base.eta = cfg.gen.eta;
  auto fill_error = [&](std::size_t di, const std::string& tag) {
    for (std::size_t c = 0; c < nc; ++c) {
      SweepResultRow& r = *slots[di * nc + c];
      r = base;
      r.delta = cfg.deltas[di];
      r.classifier = cfg.classifiers[c];
      r.error = tag;
    }
  };

  PlantedInstance inst;
  try {
    inst = cfg.gen.kind == "planted"
               ? generate_planted(cfg.gen.n, cfg.gen.k, cfg.gen.d, eps, cfg.gen.eta, seed)
               : generate_uninformative_middle(cfg.gen.n, cfg.gen.d, eps, seed);
  } catch (const Error& e) {
    for (std::size_t di = 0; di < cfg.deltas.size(); ++di) fill_error(di, "generator_failure");
    warnings.push_back(std::string("generation failed: ") + e.what());
    return;
  }
  base.k = inst.k;
  base.eps_measured = inst.eps_measured;
  base.phi_certified = inst.phi_certified;
  base.eta = inst.eta;
  const auto& g = inst.graph;
  const int k = inst.k;
  const double phi = inst.phi_certified, eta = inst.eta;

  SpectralEmbedding emb;
  try {
    emb = cached_embedding(g, k, cfg.cache_dir);
  } catch (const Error& e) {
    for (std::size_t di = 0; di < cfg.deltas.size(); ++di) fill_error(di, "numeric_failure");
    warnings.push_back(std::string("embedding failed: ") + e.what());
    return;
  }
  const auto means = cluster_means(emb, inst.iota, k);
  double min_mean_sq = INFINITY;
  for (const auto& mu : means.means) min_mean_sq = std::min(min_mean_sq, mu.squaredNorm());
  double xi = cfg.xi.mode == "value"     ? cfg.xi.value
              : cfg.xi.mode == "ceiling" ? xi_ceiling(means, phi, eta, g.n())
                                         : default_xi(g.n());
  auto oracle = make_oracle(emb.basis, cfg.backend, xi, derive_seed(seed, stream::oracle_noise));

  for (std::size_t di = 0; di < cfg.deltas.size(); ++di) {
    const double delta = cfg.deltas[di];
    SettingInputs si{g.n(), k, g.d(), inst.eps_measured, phi, eta, delta, xi, min_mean_sq};
    for (auto& w : setting_warnings(si)) warnings.push_back(w);
    // Same seed for every delta: mislabeled sets are nested as delta grows.
    const Labeling sigma = perturb_labels(inst.iota, k, delta, cfg.label_mode, seed);
    ApproxMeans am;
    std::optional<SpectralLabeler> tau;
    std::vector<int> tau_all(g.n());
    std::string failure;
    try {
      am = build_approx_means(*oracle, sigma, k, eta, phi, derive_seed(seed, stream::means));
      tau.emplace(*oracle, am, phi, eta);
      for (Vertex u = 0; u < g.n(); ++u) tau_all[u] = (*tau)(u);
    } catch (const SamplingFailure&) {
      failure = "sampling_failure";
    } catch (const InvariantViolation&) {
      failure = "invariant_violation";
    }
    if (!failure.empty()) {
      fill_error(di, failure);
      continue;
    }
    for (std::size_t c = 0; c < nc; ++c) {
      const std::string& name = cfg.classifiers[c];
      SweepResultRow& r = *slots[di * nc + c];
      r = base;
      r.delta = delta;
      r.classifier = name;
      Labeling out(g.n());
      Histogram h;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        if (name == "polytime" || name == "walk") {
          ClassifierOutput co =
              name == "polytime"
                  ? classify_all_polytime(g, sigma, *tau)
                  : classify_all_walk(g, sigma, *tau, walk_length(phi, delta, g.n()),
                                      derive_seed(seed, stream::walks, delta_key(delta)));
          out = co.labels;
          for (auto p : co.provenance) h.add(p);
        } else {
          for (Vertex u = 0; u < g.n(); ++u) {
            if (name == "labels")
              out[u] = sigma[u];
            else if (name == "naive_spectral")
              out[u] = baseline_naive_spectral(*tau, sigma, u);
            else if (name == "majority")
              out[u] = baseline_majority(g, sigma, k, u);
            else
              out[u] = baseline_majority_pp(g, sigma, k, phi, u);
            h.add(relation(tau_all[u], sigma[u], out[u]));
          }
        }
      } catch (const Error& e) {
        r.error = "classifier_failure";
        warnings.push_back(name + " failed: " + e.what());
        continue;
      }
      const auto t1 = std::chrono::steady_clock::now();
      r.rate = name == "naive_spectral" ? matched_misclassification(out, inst.iota, k)
                                        : misclassification(out, inst.iota);
      if (!inst.middle.empty()) r.rate_middle = middle_rate(out, inst.iota, inst.middle);
      if (cfg.record_runtime)
        r.runtime_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
      r.branch_agree = h.agree;
      r.branch_ambiguous = h.ambiguous;
      r.branch_impostor = h.impostor;
      r.branch_trust_spectral = h.trust;
    }
  }
}

}  // namespace

SweepOutput run_sweep(const ExperimentConfig& cfg) {
  const std::size_t nd = cfg.deltas.size(), ns = cfg.seeds.size(), nc = cfg.classifiers.size();
  const std::size_t units = cfg.gen.eps.size() * ns;
  SweepOutput out;
  out.rows.resize(units * nd * nc);
  std::vector<std::vector<std::string>> unit_warnings(units);
  // Row order: eps, delta, seed, classifier.
  auto row_index = [&](std::size_t e, std::size_t di, std::size_t s, std::size_t c) {
    return ((e * nd + di) * ns + s) * nc + c;
  };
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t u; (u = next.fetch_add(1)) < units;) {
      const std::size_t e = u / ns, s = u % ns;
      std::vector<SweepResultRow*> slots;
      for (std::size_t di = 0; di < nd; ++di)
        for (std::size_t c = 0; c < nc; ++c) slots.push_back(&out.rows[row_index(e, di, s, c)]);
      run_unit(cfg, cfg.gen.eps[e], cfg.seeds[s], slots, unit_warnings[u]);
    }
  };
  const int threads = std::min<int>(thread_budget(cfg.threads), int(units));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  std::set<std::string> seen;
  for (const auto& ws : unit_warnings)
    for (const auto& w : ws)
      if (seen.insert(w).second) out.warnings.push_back(w);
  return out;
}

const char* csv_header() {
  return "gen,n,k,d,eps_measured,phi_certified,eta,delta,seed,classifier,rate,rate_middle,"
         "runtime_ms,branch_agree,branch_ambiguous,branch_impostor,branch_trust_spectral,error";
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string opt(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

}  // namespace

void write_csv(const std::vector<SweepResultRow>& rows, std::ostream& os) {
  os << csv_header() << '\n';
  for (const auto& r : rows) {
    os << r.gen << ',' << r.n << ',' << r.k << ',' << r.d << ',' << num(r.eps_measured) << ','
       << num(r.phi_certified) << ',' << num(r.eta) << ',' << num(r.delta) << ',' << r.seed
       << ',' << r.classifier << ',' << opt(r.rate) << ',' << opt(r.rate_middle) << ','
       << opt(r.runtime_ms) << ',' << r.branch_agree << ',' << r.branch_ambiguous << ','
       << r.branch_impostor << ',' << r.branch_trust_spectral << ',' << r.error << '\n';
  }
}

std::vector<SweepResultRow> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != csv_header())
    throw ParseError(1, "CSV header does not match the sweep schema");
  std::vector<SweepResultRow> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 18) throw ParseError(lineno, "expected 18 fields");
    auto od = [](const std::string& s) -> std::optional<double> {
      if (s.empty()) return std::nullopt;
      return std::stod(s);
    };
    SweepResultRow r;
    try {
      r.gen = f[0];
      r.n = std::stoi(f[1]);
      r.k = std::stoi(f[2]);
      r.d = std::stoi(f[3]);
      r.eps_measured = std::stod(f[4]);
      r.phi_certified = std::stod(f[5]);
      r.eta = std::stod(f[6]);
      r.delta = std::stod(f[7]);
      r.seed = std::stoull(f[8]);
      r.classifier = f[9];
      r.rate = od(f[10]);
      r.rate_middle = od(f[11]);
      r.runtime_ms = od(f[12]);
      r.branch_agree = std::stoi(f[13]);
      r.branch_ambiguous = std::stoi(f[14]);
      r.branch_impostor = std::stoi(f[15]);
      r.branch_trust_spectral = std::stoi(f[16]);
      r.error = f[17];
    } catch (const std::logic_error&) {
      throw ParseError(lineno, "malformed numeric field");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace specside
