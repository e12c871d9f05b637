#include "specside/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "specside/errors.hpp"
#include "specside/rng.hpp"

namespace specside {

int spectral_label(const InnerProductOracle& o, const ApproxMeans& means, double phi,
                   double eta, Vertex u) {
  const double c = phi * phi / (400.0 * eta);
  int found = kStar;
  for (int l = 0; l < means.k(); ++l) {
    Vertex r = means.rep_for_label(l);
    if (apx_distance_sq(o, u, r) < c * o.apx(r, r)) {
      if (found != kStar)
        throw InvariantViolation("vertex " + std::to_string(u) + " lies in spectral clusters " +
                                 std::to_string(found + 1) + " and " + std::to_string(l + 1));
      found = l;
    }
  }
  return found;
}

SpectralLabeler::SpectralLabeler(const InnerProductOracle& o, const ApproxMeans& means,
                                 double phi, double eta)
    : o_(&o), k_(means.k()), phi_(phi), eta_(eta), cache_(o.n(), -2) {
  const double c = phi * phi / (400.0 * eta);
  for (int l = 0; l < k_; ++l) {
    rep_.push_back(means.rep_for_label(l));
    radius_.push_back(c * o.apx(rep_.back(), rep_.back()));
  }
}

int SpectralLabeler::operator()(Vertex u) const {
  int& slot = cache_[u];
  if (slot != -2) return slot;
  int found = kStar;
  for (int l = 0; l < k_; ++l)
    if (apx_distance_sq(*o_, u, rep_[l]) < radius_[l]) {
      if (found != kStar)
        throw InvariantViolation("vertex " + std::to_string(u) + " lies in spectral clusters " +
                                 std::to_string(found + 1) + " and " + std::to_string(l + 1));
      found = l;
    }
  return slot = found;
}

Crossing is_crossing_vertex_step(const RegularGraph& g, const SpectralLabeler& tau,
                                 Vertex w, int i) {
  // tau(w) == i exactly when w passes the radius test for label i.
  if (tau(w) != i) return Crossing::in_X;
  int q = 0;
  for (Vertex x : g.neighbors(w)) {
    int t = tau(x);
    q += t != kStar && t != i;
  }
  return q >= tau.phi() / 2.0 * g.d() ? Crossing::in_NXstar : Crossing::neither;
}

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::agree: return "agree";
    case Provenance::ambiguous: return "ambiguous";
    case Provenance::impostor_trust_label: return "impostor_trust_label";
    case Provenance::trust_spectral: return "trust_spectral";
  }
  return "?";
}

Decision classify_polytime(const RegularGraph& g, const Labeling& sigma,
                           const SpectralLabeler& tau, Vertex u) {
  const int t = tau(u);
  if (t == sigma[u]) return {sigma[u], Provenance::agree};
  if (t == kStar) return {sigma[u], Provenance::ambiguous};
  CrossGraphView view{g, tau, sigma, t, sigma[u]};
  std::vector<Vertex> queue{u};
  std::unordered_map<Vertex, char> seen{{u, 1}};
  for (std::size_t h = 0; h < queue.size(); ++h) {
    for (Vertex w : g.neighbors(queue[h])) {
      if (seen.count(w) || !view.member(w)) continue;
      if (tau(w) == kStar) return {sigma[u], Provenance::impostor_trust_label};
      seen.emplace(w, 1);
      queue.push_back(w);
    }
  }
  return {t, Provenance::trust_spectral};
}

int walk_count(int n) { return int(std::ceil(450.0 * std::log(double(n)))); }

int walk_length(double phi, double delta, int n) {
  double d = std::max(delta, 1.0 / n);
  return int(std::ceil(150.0 / (phi * phi) * std::log(1.0 / d)));
}

namespace {

struct WalkNode {
  bool crossing;
  std::vector<Vertex> moves;  // neighbor slots passing the view predicate
};

class WalkMemo {
 public:
  explicit WalkMemo(const CrossGraphView& v) : view_(v) {}

  const WalkNode& at(Vertex w) {
    auto it = memo_.find(w);
    if (it != memo_.end()) return it->second;
    WalkNode node;
    node.crossing = is_crossing_vertex_step(view_.g, view_.tau, w, view_.i) != Crossing::neither;
    if (!node.crossing)
      for (Vertex x : view_.g.neighbors(w))
        if (view_.member(x)) node.moves.push_back(x);
    return memo_.emplace(w, std::move(node)).first->second;
  }

 private:
  const CrossGraphView& view_;
  std::unordered_map<Vertex, WalkNode> memo_;
};

// One lazy walk with `length` transitions. Each step picks j uniform in
// [2d] and moves only if slot j is a view neighbor, so the walk stays put for
// a geometric number of steps; those waits are sampled in one draw.
bool crossing_walk(WalkMemo& memo, int d, Vertex u, int length, Rng& rng) {
  const WalkNode* node = &memo.at(u);
  if (node->crossing) return true;
  long remaining = length;
  while (true) {
    const int m = int(node->moves.size());
    if (m == 0) return false;
    const double p = double(m) / (2.0 * d);
    double un = 1.0 - uniform01(rng);  // (0,1]
    double wait = 1.0 + std::floor(std::log(un) / std::log1p(-p));
    if (wait > double(remaining)) return false;
    remaining -= long(wait);
    Vertex next = node->moves[std::uniform_int_distribution<int>(0, m - 1)(rng)];
    node = &memo.at(next);
    if (node->crossing) return true;
  }
}

}  // namespace

RobustConnResult robust_conn(const RegularGraph& g, const Labeling& sigma,
                             const SpectralLabeler& tau, int length, Vertex u,
                             std::uint64_t seed) {
  const int t = tau(u);
  if (t == kStar || t == sigma[u]) throw DomainError("robust_conn needs tau(u) outside {*, sigma(u)}");
  CrossGraphView view{g, tau, sigma, t, sigma[u]};
  WalkMemo memo(view);
  RobustConnResult r;
  r.walks = walk_count(g.n());
  for (int w = 0; w < r.walks; ++w) {
    Rng rng(derive_seed(seed, stream::walks, u, w));
    r.crossing += crossing_walk(memo, g.d(), u, length, rng);
  }
  r.connected = r.crossing >= 0.5 * r.walks;
  return r;
}

Decision classify_walk(const RegularGraph& g, const Labeling& sigma,
                       const SpectralLabeler& tau, int length, Vertex u, std::uint64_t seed) {
  const int t = tau(u);
  if (t == sigma[u]) return {sigma[u], Provenance::agree};
  if (t == kStar) return {sigma[u], Provenance::ambiguous};
  auto r = robust_conn(g, sigma, tau, length, u, seed);
  if (r.connected) return {sigma[u], Provenance::impostor_trust_label, r.crossing};
  return {t, Provenance::trust_spectral, r.crossing};
}

double exact_crossing_probability(const CrossGraphView& view, Vertex u, int length) {
  constexpr std::size_t kMaxComponent = 5000;
  if (!view.member(u)) throw DomainError("start vertex is not in the view");
  WalkMemo memo(view);
  if (memo.at(u).crossing) return 1.0;
  std::unordered_map<Vertex, int> index{{u, 0}};
  std::vector<Vertex> states{u};
  for (std::size_t h = 0; h < states.size(); ++h)
    for (Vertex x : memo.at(states[h]).moves)
      if (!memo.at(x).crossing && !index.count(x)) {
        index.emplace(x, int(states.size()));
        states.push_back(x);
        if (states.size() > kMaxComponent)
          throw SizeError("view component exceeds " + std::to_string(kMaxComponent) + " vertices");
      }
  const double step = 1.0 / (2.0 * view.g.d());
  std::vector<double> p(states.size(), 0.0), next(states.size());
  p[0] = 1.0;
  double absorbed = 0.0;
  for (int t = 0; t < length; ++t) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t s = 0; s < states.size(); ++s) {
      if (p[s] == 0.0) continue;
      const auto& moves = memo.at(states[s]).moves;
      next[s] += p[s] * (1.0 - step * moves.size());
      for (Vertex x : moves) {
        if (memo.at(x).crossing)
          absorbed += p[s] * step;
        else
          next[index.at(x)] += p[s] * step;
      }
    }
    p.swap(next);
  }
  return absorbed;
}

int baseline_majority(const RegularGraph& g, const Labeling& sigma, int k, Vertex u) {
  std::vector<int> votes(k, 0);
  for (Vertex w : g.neighbors(u)) ++votes[sigma[w]];
  int best = *std::max_element(votes.begin(), votes.end());
  if (votes[sigma[u]] == best) return sigma[u];
  return int(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

int baseline_majority_pp(const RegularGraph& g, const Labeling& sigma, int k, double phi,
                         Vertex u) {
  if (k != 2) throw DomainError("majority-voting++ is defined for k = 2");
  int ones = 0, twos = 0;
  for (Vertex w : g.neighbors(u)) (sigma[w] == 0 ? ones : twos)++;
  const double cut = 2.0 / 3.0 * phi * g.d();
  if (ones <= cut) return 1;
  if (twos <= cut) return 0;
  return sigma[u];
}

int baseline_naive_spectral(const SpectralLabeler& tau, const Labeling& sigma, Vertex u) {
  int t = tau(u);
  return t == kStar ? sigma[u] : t;
}

double misclassification(const Labeling& out, const Labeling& iota) {
  if (out.size() != iota.size()) throw DomainError("labelings differ in length");
  if (out.empty()) return 0.0;
  std::size_t wrong = 0;
  for (std::size_t u = 0; u < out.size(); ++u) wrong += out[u] != iota[u];
  return double(wrong) / double(out.size());
}

std::vector<int> best_label_matching(const Labeling& out, const Labeling& iota, int k) {
  // Hungarian method on cost = -agreement (1-based arrays, row = output id).
  std::vector<std::vector<long>> agree(k + 1, std::vector<long>(k + 1, 0));
  for (std::size_t u = 0; u < out.size(); ++u) ++agree[out[u] + 1][iota[u] + 1];
  const long inf = std::numeric_limits<long>::max() / 4;
  std::vector<long> a(k + 1, 0), b(k + 1, 0), way(k + 1, 0), col_row(k + 1, 0);
  for (int i = 1; i <= k; ++i) {
    col_row[0] = i;
    int j0 = 0;
    std::vector<long> minv(k + 1, inf);
    std::vector<char> used(k + 1, 0);
    do {
      used[j0] = 1;
      int i0 = int(col_row[j0]), j1 = 0;
      long delta = inf;
      for (int j = 1; j <= k; ++j) {
        if (used[j]) continue;
        long cur = -agree[i0][j] - a[i0] - b[j];
        if (cur < minv[j]) minv[j] = cur, way[j] = j0;
        if (minv[j] < delta) delta = minv[j], j1 = j;
      }
      for (int j = 0; j <= k; ++j) {
        if (used[j])
          a[col_row[j]] += delta, b[j] -= delta;
        else
          minv[j] -= delta;
      }
      j0 = j1;
    } while (col_row[j0] != 0);
    do {
      int j1 = int(way[j0]);
      col_row[j0] = col_row[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> map(k);
  for (int j = 1; j <= k; ++j) map[col_row[j] - 1] = j - 1;
  return map;
}

double matched_misclassification(const Labeling& out, const Labeling& iota, int k) {
  auto map = best_label_matching(out, iota, k);
  Labeling mapped(out.size());
  for (std::size_t u = 0; u < out.size(); ++u) mapped[u] = map[out[u]];
  return misclassification(mapped, iota);
}

ClassifierOutput classify_all_polytime(const RegularGraph& g, const Labeling& sigma,
                                       const SpectralLabeler& tau) {
  ClassifierOutput out;
  out.labels.resize(g.n());
  out.provenance.resize(g.n());
  out.crossing_walks.assign(g.n(), -1);
  for (Vertex u = 0; u < g.n(); ++u) {
    auto dcs = classify_polytime(g, sigma, tau, u);
    out.labels[u] = dcs.label;
    out.provenance[u] = dcs.why;
  }
  return out;
}

ClassifierOutput classify_all_walk(const RegularGraph& g, const Labeling& sigma,
                                   const SpectralLabeler& tau, int length,
                                   std::uint64_t seed) {
  ClassifierOutput out;
  out.labels.resize(g.n());
  out.provenance.resize(g.n());
  out.crossing_walks.assign(g.n(), -1);
  for (Vertex u = 0; u < g.n(); ++u) {
    auto dcs = classify_walk(g, sigma, tau, length, u, seed);
    out.labels[u] = dcs.label;
    out.provenance[u] = dcs.why;
    out.crossing_walks[u] = dcs.crossing_walks;
  }
  return out;
}

}  // namespace specside
