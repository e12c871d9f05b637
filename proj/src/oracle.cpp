#include "specside/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "specside/errors.hpp"
#include "specside/rng.hpp"

namespace specside {

InnerProductOracle::InnerProductOracle(const Eigen::MatrixXd& basis, double xi,
                                       std::string backend)
    : n_(int(basis.rows())), k_(int(basis.cols())), rows_(basis.size()), xi_(xi),
      backend_(std::move(backend)) {
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < k_; ++j) rows_[std::size_t(i) * k_ + j] = basis(i, j);
}

double InnerProductOracle::exact(Vertex u, Vertex v) const {
  const double* a = rows_.data() + std::size_t(u) * k_;
  const double* b = rows_.data() + std::size_t(v) * k_;
  double s = 0.0;
  for (int j = 0; j < k_; ++j) s += a[j] * b[j];
  return s;
}

namespace {

class NoisyOracle final : public InnerProductOracle {
 public:
  NoisyOracle(const Eigen::MatrixXd& basis, double xi, std::uint64_t seed)
      : InnerProductOracle(basis, xi, "noisy"), seed_(seed), scale_(xi / basis.rows()) {}

  double apx(Vertex u, Vertex v) const override {
    std::uint64_t h = derive_seed(seed_, stream::oracle_noise, std::min(u, v), std::max(u, v));
    double unit = double(h >> 11) * 0x1.0p-53;  // [0,1)
    return exact(u, v) + scale_ * (2.0 * unit - 1.0);
  }

 private:
  std::uint64_t seed_;
  double scale_;
};

}  // namespace

OracleBackend parse_oracle_backend(const std::string& s) {
  if (s == "exact") return OracleBackend::exact;
  if (s == "noisy") return OracleBackend::noisy;
  throw ParameterError("unknown oracle backend '" + s + "'");
}

std::unique_ptr<InnerProductOracle> make_oracle(const Eigen::MatrixXd& basis,
                                                OracleBackend backend, double xi,
                                                std::uint64_t seed) {
  if (!(xi >= 0.0)) throw ParameterError("xi must be nonnegative");
  if (backend == OracleBackend::exact)
    return std::make_unique<InnerProductOracle>(basis, xi, "exact");
  return std::make_unique<NoisyOracle>(basis, xi, seed);
}

double xi_ceiling(const ClusterMeans& means, double phi, double eta, int n) {
  double m = INFINITY;
  for (const auto& mu : means.means) m = std::min(m, mu.squaredNorm());
  return n * phi * phi / (160000.0 * eta) * m;
}

double apx_distance_sq(const InnerProductOracle& o, Vertex u, Vertex v) {
  return o.apx(u, u) + o.apx(v, v) - 2.0 * o.apx(u, v);
}

Vertex ApproxMeans::rep_for_label(int l) const {
  for (int i = 0; i < k(); ++i)
    if (pi[i] == l) return representatives[i];
  throw DomainError("no representative for label " + std::to_string(l + 1));
}

int sample_count(double factor, int k, double eta) {
  double s = std::ceil(factor * eta * k * std::log(double(k)));
  return std::max(8, int(s));
}

std::vector<Vertex> approx_cluster_means_once(const InnerProductOracle& o, int k, double eta,
                                              std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<int> pick(0, o.n() - 1);
  const int s = sample_count(10.0, k, eta);
  std::vector<Vertex> t(s);
  for (auto& v : t) v = pick(rng);
  std::vector<double> self(s);
  for (int a = 0; a < s; ++a) self[a] = o.apx(t[a], t[a]);
  // H joins sample slots a, b when either direction passes the 0.9 rule.
  std::vector<std::vector<char>> h(s, std::vector<char>(s, 0));
  for (int a = 0; a < s; ++a)
    for (int b = 0; b < s; ++b)
      if (a != b && o.apx(t[a], t[b]) >= 0.9 * self[a]) h[a][b] = h[b][a] = 1;
  std::vector<char> alive(s, 1);
  std::vector<Vertex> out;
  for (int a = 0; a < s; ++a) {
    if (!alive[a]) continue;
    out.push_back(t[a]);
    alive[a] = 0;
    for (int b = 0; b < s; ++b)
      if (h[a][b]) alive[b] = 0;
  }
  return out;
}

std::vector<Vertex> approx_cluster_means(const InnerProductOracle& o, int k, double eta,
                                         std::uint64_t seed) {
  constexpr int kAttempts = 5;
  std::size_t last = 0;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    auto reps = approx_cluster_means_once(o, k, eta, derive_seed(seed, stream::means, attempt));
    if (int(reps.size()) == k) return reps;
    last = reps.size();
  }
  throw SamplingFailure("approximate means returned " + std::to_string(last) +
                        " representatives instead of " + std::to_string(k) + " after " +
                        std::to_string(kAttempts) + " attempts");
}

std::vector<int> recover_permutation(const InnerProductOracle& o,
                                     const std::vector<Vertex>& reps, const Labeling& sigma,
                                     int k, double eta, double phi, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<int> pick(0, o.n() - 1);
  const int s = sample_count(50.0, k, eta);
  std::vector<Vertex> t(s);
  for (auto& v : t) v = pick(rng);
  const double c = phi * phi / (400.0 * eta);
  std::vector<int> pi(reps.size());
  std::vector<char> taken(k, 0);
  for (std::size_t i = 0; i < reps.size(); ++i) {
    const double radius = c * o.apx(reps[i], reps[i]);
    std::vector<int> votes(k, 0);
    int hits = 0;
    for (Vertex v : t)
      if (apx_distance_sq(o, v, reps[i]) <= radius) ++votes[sigma[v]], ++hits;
    if (hits == 0)
      throw SamplingFailure("no sampled vertex near representative " + std::to_string(reps[i]));
    pi[i] = int(std::max_element(votes.begin(), votes.end()) - votes.begin());
    if (taken[pi[i]]) throw SamplingFailure("recovered labels are not a bijection");
    taken[pi[i]] = 1;
  }
  return pi;
}

ApproxMeans build_approx_means(const InnerProductOracle& o, const Labeling& sigma, int k,
                               double eta, double phi, std::uint64_t seed, int attempts) {
  std::string last;
  for (int a = 0; a < attempts; ++a) {
    try {
      ApproxMeans m;
      m.representatives = approx_cluster_means(o, k, eta, derive_seed(seed, stream::means, a));
      std::sort(m.representatives.begin(), m.representatives.end());
      if (std::adjacent_find(m.representatives.begin(), m.representatives.end()) !=
          m.representatives.end())
        throw SamplingFailure("duplicate representatives");
      m.pi = recover_permutation(o, m.representatives, sigma, k, eta, phi,
                                 derive_seed(seed, stream::permutation, a));
      return m;
    } catch (const SamplingFailure& e) {
      last = e.what();
    }
  }
  throw SamplingFailure(last);
}

}  // namespace specside
