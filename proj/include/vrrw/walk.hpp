#pragma once

// Discrete reinforced walk (matrix form and loop form), the continuous-time
// exponential-clock construction, and the trap event of the clock family.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "vrrw/dynamics.hpp"
#include "vrrw/error.hpp"
#include "vrrw/graph_model.hpp"

namespace vrrw {

using Rng = std::mt19937_64;

/// Uniform on [0, 1) from the top 53 bits; portable across standard libraries.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// SplitMix64 finaliser.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) { return mix64(a ^ mix64(b)); }

struct WalkState {
  int site = 0;
  /// Z_n(j): visits to j up to and including time n.
  std::vector<std::uint64_t> counts;
  std::uint64_t step = 0;

  [[nodiscard]] SimplexPoint occupation() const {
    Vector v(static_cast<Eigen::Index>(counts.size()));
    for (std::size_t j = 0; j < counts.size(); ++j)
      v(static_cast<Eigen::Index>(j)) = static_cast<double>(counts[j]) / static_cast<double>(step + 1);
    return project_to_simplex(v);
  }

  friend bool operator==(const WalkState&, const WalkState&) = default;
};

inline WalkState init_walk(const ModelParameters& p, int start) {
  if (start < 0 || start >= p.size()) {
    throw Error(ErrorKind::SiteRange, "start site " + std::to_string(start + 1) +
                                          " outside 1.." + std::to_string(p.size()));
  }
  WalkState s;
  s.site = start;
  s.counts.assign(static_cast<std::size_t>(p.size()), 0);
  s.counts[static_cast<std::size_t>(start)] = 1;
  return s;
}

namespace detail {

/// Inverse-CDF draw from unnormalised weights. Zero-weight sites are never
/// returned.
inline int sample_weighted(const std::vector<double>& weights, double total, double u) {
  const double target = u * total;
  double cum = 0.0;
  int last_positive = -1;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    if (weights[j] <= 0.0) continue;
    cum += weights[j];
    last_positive = static_cast<int>(j);
    if (target < cum) return static_cast<int>(j);
  }
  return last_positive;
}

inline void row_weights(const ModelParameters& p, const WalkState& s, std::optional<double> diagonal,
                        std::vector<double>& weights, double& total) {
  const int n = p.size();
  weights.resize(static_cast<std::size_t>(n));
  total = 0.0;
  for (int j = 0; j < n; ++j) {
    const double a = (j == s.site && diagonal) ? *diagonal : p.matrix(s.site, j);
    const double w = a * std::pow(1.0 + static_cast<double>(s.counts[static_cast<std::size_t>(j)]), p.alpha);
    weights[static_cast<std::size_t>(j)] = w;
    total += w;
  }
}

inline WalkState advance(WalkState s, int next) {
  s.site = next;
  ++s.counts[static_cast<std::size_t>(next)];
  ++s.step;
  return s;
}

}  // namespace detail

/// Law of X_{n+1} given the state: A[X_n][j] (1 + Z_n(j))^alpha, normalised.
inline Vector step_law(const ModelParameters& p, const WalkState& s) {
  std::vector<double> w;
  double total = 0.0;
  detail::row_weights(p, s, std::nullopt, w, total);
  Vector out(static_cast<Eigen::Index>(w.size()));
  for (std::size_t j = 0; j < w.size(); ++j) out(static_cast<Eigen::Index>(j)) = w[j] / total;
  return out;
}

inline WalkState step(const ModelParameters& p, WalkState s, Rng& rng) {
  std::vector<double> w;
  double total = 0.0;
  detail::row_weights(p, s, std::nullopt, w, total);
  const int next = detail::sample_weighted(w, total, uniform01(rng));
  return detail::advance(std::move(s), next);
}

/// Loop model step: the current site competes with weight c (1 + Z_n)^alpha,
/// with c = p.loop_c. At c = 0 this consumes the same randomness and returns
/// the same site as `step` on the loop-free matrix.
inline WalkState step_loop_model(const ModelParameters& p, WalkState s, Rng& rng) {
  std::vector<double> w;
  double total = 0.0;
  detail::row_weights(p, s, p.loop_c, w, total);
  const int next = detail::sample_weighted(w, total, uniform01(rng));
  return detail::advance(std::move(s), next);
}

struct Checkpoint {
  std::uint64_t n;
  std::vector<std::uint64_t> counts;

  [[nodiscard]] SimplexPoint occupation() const {
    Vector v(static_cast<Eigen::Index>(counts.size()));
    for (std::size_t j = 0; j < counts.size(); ++j)
      v(static_cast<Eigen::Index>(j)) = static_cast<double>(counts[j]) / static_cast<double>(n + 1);
    return project_to_simplex(v);
  }
};

struct TrajectoryRecord {
  int start = 0;
  int sites_count = 0;
  std::optional<ModelParameters> params;
  std::uint64_t seed = 0;
  std::uint64_t horizon = 0;
  /// X_0..X_horizon when horizon <= the full-log limit, otherwise empty.
  std::vector<int> sites;
  /// Occupation snapshots at n = ceil(1.2^m), any requested extra times and
  /// the horizon, increasing in n.
  std::vector<Checkpoint> checkpoints;
  std::vector<std::uint64_t> final_counts;

  [[nodiscard]] bool has_full_log() const { return !sites.empty(); }

  [[nodiscard]] SimplexPoint final_occupation() const {
    return Checkpoint{horizon, final_counts}.occupation();
  }

  /// Visit counts up to time n, exact when the full log or a checkpoint at n
  /// exists; otherwise the latest checkpoint before n.
  [[nodiscard]] std::vector<std::uint64_t> counts_at(std::uint64_t n) const {
    if (has_full_log()) {
      std::vector<std::uint64_t> c(static_cast<std::size_t>(sites_count), 0);
      for (std::uint64_t i = 0; i <= n && i < sites.size(); ++i) ++c[static_cast<std::size_t>(sites[i])];
      return c;
    }
    const Checkpoint* best = nullptr;
    for (const auto& cp : checkpoints) {
      if (cp.n <= n) best = &cp;
    }
    if (best == nullptr) throw Error(ErrorKind::InsufficientData, "no checkpoint before n");
    return best->counts;
  }
};

struct SimulateOptions {
  std::uint64_t full_log_limit = 1'000'000;
  double checkpoint_ratio = 1.2;
  std::vector<std::uint64_t> extra_checkpoints;
  bool loop_step = false;
};

/// Geometric checkpoint times ceil(r^m) <= horizon, merged with extras and
/// the horizon itself.
inline std::vector<std::uint64_t> checkpoint_times(std::uint64_t horizon, double ratio,
                                                    const std::vector<std::uint64_t>& extra) {
  std::vector<std::uint64_t> times;
  for (int m = 0;; ++m) {
    const double t = std::ceil(std::pow(ratio, m));
    if (t > static_cast<double>(horizon)) break;
    times.push_back(static_cast<std::uint64_t>(t));
  }
  for (auto t : extra)
    if (t <= horizon) times.push_back(t);
  times.push_back(horizon);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  return times;
}

/// Runs `horizon` steps from `start`. Weights are cached per site and only the
/// visited site's weight is recomputed, with the same expression as `step`, so
/// the trajectory is identical to iterating `step` with the same generator.
inline TrajectoryRecord simulate(const ModelParameters& p, int start, std::uint64_t horizon,
                                 std::uint64_t seed, const SimulateOptions& opt = {}) {
  if (horizon < 1) throw Error(ErrorKind::Domain, "horizon must be >= 1");
  WalkState s = init_walk(p, start);
  Rng rng(seed);
  const int n = p.size();
  const auto times = checkpoint_times(horizon, opt.checkpoint_ratio, opt.extra_checkpoints);

  TrajectoryRecord rec;
  rec.start = start;
  rec.sites_count = n;
  rec.params = p;
  rec.seed = seed;
  rec.horizon = horizon;
  const bool full = horizon <= opt.full_log_limit;
  if (full) {
    rec.sites.reserve(static_cast<std::size_t>(horizon) + 1);
    rec.sites.push_back(start);
  }

  std::vector<double> reinforcement(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j)
    reinforcement[static_cast<std::size_t>(j)] =
        std::pow(1.0 + static_cast<double>(s.counts[static_cast<std::size_t>(j)]), p.alpha);
  std::vector<double> w(static_cast<std::size_t>(n));
  std::size_t next_cp = 0;
  if (times[0] == 0) {
    rec.checkpoints.push_back({0, s.counts});
    ++next_cp;
  }
  const bool loop_step = opt.loop_step;

  for (std::uint64_t t = 0; t < horizon; ++t) {
    double total = 0.0;
    for (int j = 0; j < n; ++j) {
      const double a = (loop_step && j == s.site) ? p.loop_c : p.matrix(s.site, j);
      const double x = a * reinforcement[static_cast<std::size_t>(j)];
      w[static_cast<std::size_t>(j)] = x;
      total += x;
    }
    const int next = detail::sample_weighted(w, total, uniform01(rng));
    s.site = next;
    const auto idx = static_cast<std::size_t>(next);
    ++s.counts[idx];
    ++s.step;
    reinforcement[idx] = std::pow(1.0 + static_cast<double>(s.counts[idx]), p.alpha);
    if (full) rec.sites.push_back(next);
    if (next_cp < times.size() && times[next_cp] == s.step) {
      rec.checkpoints.push_back({s.step, s.counts});
      ++next_cp;
    }
  }
  rec.final_counts = s.counts;
  return rec;
}

// ---------------------------------------------------------------------------
// Exponential-clock construction

/// Simple undirected graph as adjacency lists.
struct Graph {
  std::vector<std::vector<int>> adjacency;

  [[nodiscard]] int size() const { return static_cast<int>(adjacency.size()); }
  [[nodiscard]] int degree(int x) const { return static_cast<int>(adjacency[static_cast<std::size_t>(x)].size()); }
  [[nodiscard]] int max_degree() const {
    int d = 0;
    for (const auto& a : adjacency) d = std::max(d, static_cast<int>(a.size()));
    return d;
  }

  static Graph complete(int n) {
    Graph g;
    g.adjacency.resize(static_cast<std::size_t>(n));
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y)
        if (x != y) g.adjacency[static_cast<std::size_t>(x)].push_back(y);
    return g;
  }
  static Graph path(int n) {
    Graph g;
    g.adjacency.resize(static_cast<std::size_t>(n));
    for (int x = 0; x + 1 < n; ++x) {
      g.adjacency[static_cast<std::size_t>(x)].push_back(x + 1);
      g.adjacency[static_cast<std::size_t>(x + 1)].push_back(x);
    }
    return g;
  }
  /// Center 0 joined to `leaves` leaves.
  static Graph star(int leaves) {
    Graph g;
    g.adjacency.resize(static_cast<std::size_t>(leaves) + 1);
    for (int y = 1; y <= leaves; ++y) {
      g.adjacency[0].push_back(y);
      g.adjacency[static_cast<std::size_t>(y)].push_back(0);
    }
    return g;
  }
};

struct ClockConfig {
  Graph graph;
  /// w(l) > 0: clock index l rings after an exponential time of mean 1/w(l).
  std::function<double(std::uint64_t)> weight;
  /// Upper bound on sum_{l >= from} 1/w(l); +inf when not summable.
  std::function<double(std::uint64_t)> tail_sum;
  bool summable = true;

  /// w(l) = (l + 1)^alpha.
  static ClockConfig power(Graph g, double alpha) {
    ClockConfig c;
    c.graph = std::move(g);
    c.weight = [alpha](std::uint64_t l) { return std::pow(static_cast<double>(l) + 1.0, alpha); };
    c.tail_sum = [alpha](std::uint64_t from) {
      if (alpha <= 1.0) return std::numeric_limits<double>::infinity();
      // sum_{l >= from} (l+1)^-alpha <= (from+1)^-alpha + int_{from+1}^inf x^-alpha dx
      const double a = static_cast<double>(from) + 1.0;
      return std::pow(a, -alpha) + std::pow(a, 1.0 - alpha) / (alpha - 1.0);
    };
    c.summable = alpha > 1.0;
    return c;
  }
};

struct RubinRecord {
  TrajectoryRecord record;
  /// tau_0 = 0, tau_1, ...: jump times of the continuous-time process.
  std::vector<double> jump_times;
  std::uint64_t ties = 0;
};

namespace detail {

/// Exponential of mean 1/w from a counter-keyed uniform, so xi_l^e does not
/// depend on the order in which clocks are consulted.
inline double keyed_exponential(std::uint64_t seed, std::uint64_t edge, std::uint64_t index,
                                std::uint64_t salt, double w) {
  const std::uint64_t bits = mix64(mix64(mix64(seed, edge), index), salt);
  const double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
  return -std::log1p(-u) / w;
}

}  // namespace detail

/// Continuous-time walk driven by one clock per directed edge. On arrival at
/// x, the clock of (x, y) is started afresh with index Z(y) when y was visited
/// since the walk last left x (or no clock was ever started on that edge);
/// otherwise the clock stopped when the walk left x resumes with its
/// remaining time. The first clock to ring decides the jump and all clocks
/// out of x are then stopped.
inline RubinRecord rubin_simulate(const ClockConfig& cfg, int start, std::uint64_t jump_budget,
                                  std::uint64_t seed) {
  const int n = cfg.graph.size();
  if (start < 0 || start >= n) throw Error(ErrorKind::SiteRange, "start site out of range");
  if (jump_budget < 1) throw Error(ErrorKind::Domain, "jump budget must be >= 1");

  // Directed edge ids: offset[x] + position of y in adjacency[x].
  std::vector<std::size_t> offset(static_cast<std::size_t>(n) + 1, 0);
  for (int x = 0; x < n; ++x) offset[static_cast<std::size_t>(x) + 1] = offset[static_cast<std::size_t>(x)] + static_cast<std::size_t>(cfg.graph.degree(x));
  const std::size_t edges = offset.back();

  struct EdgeClock {
    bool started = false;
    double remaining = 0.0;
    std::uint64_t index = 0;
    std::uint64_t count_snapshot = 0;
  };
  std::vector<EdgeClock> clocks(edges);
  std::vector<std::uint64_t> visits(static_cast<std::size_t>(n), 0);
  visits[static_cast<std::size_t>(start)] = 1;

  RubinRecord out;
  auto& rec = out.record;
  rec.start = start;
  rec.sites_count = n;
  rec.seed = seed;
  rec.horizon = jump_budget;
  rec.sites.reserve(static_cast<std::size_t>(jump_budget) + 1);
  rec.sites.push_back(start);
  out.jump_times.push_back(0.0);

  std::uint64_t tie_salt = 0;
  double now = 0.0;
  int x = start;
  std::vector<double> ring_at;
  for (std::uint64_t jump = 0; jump < jump_budget; ++jump) {
    const auto& nbrs = cfg.graph.adjacency[static_cast<std::size_t>(x)];
    if (nbrs.empty()) throw Error(ErrorKind::Domain, "walk reached an isolated vertex");
    const std::size_t base = offset[static_cast<std::size_t>(x)];
    ring_at.assign(nbrs.size(), 0.0);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      EdgeClock& c = clocks[base + k];
      const auto y = static_cast<std::size_t>(nbrs[k]);
      if (!c.started || visits[y] > c.count_snapshot) {
        c.started = true;
        c.index = visits[y];
        c.remaining = detail::keyed_exponential(seed, base + k, c.index, 0, cfg.weight(c.index));
      }
      ring_at[k] = now + c.remaining;
    }
    std::size_t winner = 0;
    for (;;) {
      winner = 0;
      bool tie = false;
      for (std::size_t k = 1; k < nbrs.size(); ++k) {
        if (ring_at[k] < ring_at[winner]) {
          winner = k;
          tie = false;
        } else if (ring_at[k] == ring_at[winner]) {
          tie = true;
        }
      }
      if (!tie) break;
      // Measure-zero event: redraw every clock sharing the minimum.
      ++out.ties;
      ++tie_salt;
      const double low = ring_at[winner];
      for (std::size_t k = 0; k < nbrs.size(); ++k) {
        if (ring_at[k] != low) continue;
        EdgeClock& c = clocks[base + k];
        c.remaining = (low - now) + detail::keyed_exponential(seed, base + k, c.index, tie_salt,
                                                              cfg.weight(c.index));
        ring_at[k] = now + c.remaining;
      }
    }
    const double t_jump = ring_at[winner];
    const int y = nbrs[winner];
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      EdgeClock& c = clocks[base + k];
      c.count_snapshot = visits[static_cast<std::size_t>(nbrs[k])];
      if (k == winner) {
        c.started = false;  // rang: consumed
      } else {
        c.remaining = ring_at[k] - t_jump;
      }
    }
    now = t_jump;
    x = y;
    ++visits[static_cast<std::size_t>(y)];
    rec.sites.push_back(y);
    out.jump_times.push_back(now);
  }
  rec.final_counts = visits;
  rec.checkpoints.push_back({jump_budget, visits});
  return out;
}

// ---------------------------------------------------------------------------
// Trap event E_x(N): every tail sum sum_{l >= N} xi_l^{(x,y)} beats the first
// ring min_z xi_0^{(x,z)} out of x.

struct TrapBound {
  /// prod_{N <= l <= truncation} (1 - d w(0)/w(l))^d.
  double value;
  /// The infinite product lies in [value * exp(-log_error), value].
  double log_error;
  [[nodiscard]] double lower() const { return value * std::exp(-log_error); }
};

/// prod_{l >= N} (1 - d w(0)/w(l))^d, truncated at `truncation` with a
/// certified log-space error from the summable tail.
inline TrapBound trap_probability_bound(int d, const ClockConfig& clocks, std::uint64_t first,
                                        std::uint64_t truncation) {
  if (d < 1) throw Error(ErrorKind::Domain, "degree bound must be >= 1");
  if (truncation < first) throw Error(ErrorKind::Domain, "truncation must be >= N");
  const double w0 = clocks.weight(0);
  const double tail = clocks.tail_sum ? clocks.tail_sum(truncation + 1)
                                      : std::numeric_limits<double>::infinity();
  if (!clocks.summable || !std::isfinite(tail)) {
    throw Error(ErrorKind::Summability, "sum of 1/w(l) does not converge at the configured truncation");
  }
  double log_value = 0.0;
  for (std::uint64_t l = first; l <= truncation; ++l) {
    const double x = d * w0 / clocks.weight(l);
    if (x >= 1.0) return {0.0, 0.0};
    log_value += d * std::log1p(-x);
  }
  const double x_next = d * w0 / clocks.weight(truncation + 1);
  if (x_next >= 1.0) return {0.0, 0.0};
  // -log(1 - x) <= x / (1 - x), and x_l <= x_next beyond the truncation for
  // nondecreasing weights.
  const double log_error = d * (d * w0 * tail) / (1.0 - x_next);
  return {std::exp(log_value), log_error};
}

/// prod_{l >= N} (w(l) / (w(l) + d w(0)))^d: the probability the event would
/// have if each tail sum raced its own independent copy of the first ring.
inline double trap_independent_product(int d, const ClockConfig& clocks, std::uint64_t first,
                                       std::uint64_t truncation) {
  const double lambda = d * clocks.weight(0);
  double log_value = 0.0;
  for (std::uint64_t l = first; l <= truncation; ++l) {
    const double w = clocks.weight(l);
    log_value -= d * std::log1p(lambda / w);
  }
  return std::exp(log_value);
}

/// Draws the indicator of E_x(first) at a vertex of degree `degree`.
/// Indices below `explicit_terms` are sampled; the rest of each tail sum is
/// replaced by its mean, whose standard deviation is below 1e-9 for the
/// default power weights.
class TrapEventSampler {
 public:
  TrapEventSampler(int degree, const ClockConfig& clocks, std::uint64_t first,
                   std::uint64_t explicit_terms = 2000)
      : degree_(degree), w0_(clocks.weight(0)) {
    if (degree < 1) throw Error(ErrorKind::Domain, "degree must be >= 1");
    if (!clocks.summable) throw Error(ErrorKind::Summability, "trap event needs summable 1/w");
    const std::uint64_t cut = std::max(first, explicit_terms);
    for (std::uint64_t l = first; l < cut; ++l) rates_.push_back(clocks.weight(l));
    constexpr std::uint64_t kSummed = 1'000'000;
    for (std::uint64_t l = cut; l < cut + kSummed; ++l) remainder_ += 1.0 / clocks.weight(l);
    if (clocks.tail_sum) remainder_ += clocks.tail_sum(cut + kSummed);
  }

  bool operator()(Rng& rng) const {
    double first_ring = std::numeric_limits<double>::infinity();
    for (int z = 0; z < degree_; ++z) first_ring = std::min(first_ring, -std::log1p(-uniform01(rng)) / w0_);
    for (int y = 0; y < degree_; ++y) {
      double sum = remainder_;
      for (double w : rates_) sum += -std::log1p(-uniform01(rng)) / w;
      if (sum >= first_ring) return false;
    }
    return true;
  }

 private:
  int degree_;
  double w0_;
  std::vector<double> rates_;
  double remainder_ = 0.0;
};

}  // namespace vrrw
