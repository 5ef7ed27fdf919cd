#pragma once

// Monte Carlo campaigns: localization detection, nearest-equilibrium
// diagnostics and deterministic aggregation over replicas.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "vrrw/csv.hpp"
#include "vrrw/dynamics.hpp"
#include "vrrw/equilibria.hpp"
#include "vrrw/json.hpp"
#include "vrrw/walk.hpp"

namespace vrrw {

inline constexpr const char* kCodeVersion = "vrrw 0.1.0";

struct DetectionParams {
  double tail_fraction = 0.5;
  double min_share = 0.02;
};

struct Localization {
  std::vector<int> support;
  /// Tail occupation renormalised on the retained sites (zero elsewhere).
  Vector profile;
};

/// First time of the tail window: the window covers steps tail_start+1..horizon.
inline std::uint64_t tail_start(std::uint64_t horizon, double tail_fraction) {
  const auto len = static_cast<std::uint64_t>(std::floor(tail_fraction * static_cast<double>(horizon)));
  return horizon - std::max<std::uint64_t>(len, 1);
}

/// Keeps the sites visited in the final `tail_fraction` of the steps with a
/// tail share of at least `min_share`.
inline Localization detect_localization(const TrajectoryRecord& rec, double tail_fraction,
                                        double min_share) {
  if (rec.horizon < 10) throw Error(ErrorKind::Domain, "localization needs horizon >= 10");
  if (!(tail_fraction > 0.0 && tail_fraction < 1.0)) {
    throw Error(ErrorKind::Domain, "tail_fraction must lie in (0, 1)");
  }
  const std::uint64_t n0 = tail_start(rec.horizon, tail_fraction);
  const auto before = rec.counts_at(n0);
  const double length = static_cast<double>(rec.horizon - n0);
  const int n = rec.sites_count;

  std::vector<double> tail(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    tail[static_cast<std::size_t>(i)] =
        static_cast<double>(rec.final_counts[static_cast<std::size_t>(i)] - before[static_cast<std::size_t>(i)]);

  Localization loc;
  for (int i = 0; i < n; ++i) {
    const double c = tail[static_cast<std::size_t>(i)];
    if (c >= 1.0 && c / length >= min_share) loc.support.push_back(i);
  }
  if (loc.support.empty()) {
    loc.support.push_back(static_cast<int>(std::max_element(tail.begin(), tail.end()) - tail.begin()));
  }
  double mass = 0.0;
  for (int i : loc.support) mass += tail[static_cast<std::size_t>(i)];
  loc.profile = Vector::Zero(n);
  for (int i : loc.support) loc.profile(i) = tail[static_cast<std::size_t>(i)] / mass;
  return loc;
}

struct ExperimentConfig {
  explicit ExperimentConfig(ModelParameters m) : model(std::move(m)) {}

  ModelParameters model;
  std::uint64_t replicas = 1;
  std::uint64_t horizon = 100000;
  /// Fixed start site, or uniformly random per replica when empty.
  std::optional<int> start;
  std::uint64_t base_seed = 0;
  DetectionParams detection;

  void validate() const {
    if (replicas < 1) throw Error(ErrorKind::Config, "replicas must be >= 1");
    if (horizon < 10) throw Error(ErrorKind::Config, "horizon must be >= 10");
    if (!(detection.tail_fraction > 0.0 && detection.tail_fraction < 1.0)) {
      throw Error(ErrorKind::Config, "tail_fraction must lie in (0, 1)");
    }
    if (start && (*start < 0 || *start >= model.size())) {
      throw Error(ErrorKind::SiteRange, "start site out of range");
    }
  }
};

inline std::uint64_t replica_seed(std::uint64_t base_seed, std::uint64_t replica) {
  return mix64(base_seed, replica);
}

inline Json config_to_json(const ExperimentConfig& cfg) {
  return Json{{"model", model_to_json(cfg.model)},
              {"replicas", cfg.replicas},
              {"horizon", cfg.horizon},
              {"start", cfg.start ? Json(*cfg.start + 1) : Json("uniform-random")},
              {"base_seed", cfg.base_seed},
              {"detection", {{"tail_fraction", cfg.detection.tail_fraction},
                             {"min_share", cfg.detection.min_share}}}};
}

inline ExperimentConfig config_from_json(const Json& j) {
  try {
    ExperimentConfig cfg{model_from_json(j.at("model"))};
    cfg.replicas = j.value("replicas", std::uint64_t{1});
    cfg.horizon = j.value("horizon", std::uint64_t{100000});
    if (j.contains("start") && !(j.at("start").is_string() && j.at("start") == "uniform-random")) {
      cfg.start = j.at("start").get<int>() - 1;
    }
    cfg.base_seed = j.value("base_seed", std::uint64_t{0});
    if (j.contains("detection")) {
      cfg.detection.tail_fraction = j.at("detection").value("tail_fraction", 0.5);
      cfg.detection.min_share = j.at("detection").value("min_share", 0.02);
    }
    cfg.validate();
    return cfg;
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::Config, std::string("malformed campaign config: ") + e.what());
  }
}

/// FNV-1a over the canonical JSON dump of the config.
inline std::uint64_t config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : config_to_json(cfg).dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t x) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

struct ReplicaResult {
  std::uint64_t replica = 0;
  std::uint64_t seed = 0;
  int start = 0;
  std::vector<int> support;
  Vector final_occupation;
  Vector tail_profile;
  /// Index into CampaignResult::equilibria, -1 when none are available.
  int nearest_equilibrium = -1;
  double distance = 0.0;

  friend bool operator==(const ReplicaResult& a, const ReplicaResult& b) {
    return a.replica == b.replica && a.seed == b.seed && a.start == b.start &&
           a.support == b.support && a.final_occupation == b.final_occupation &&
           a.tail_profile == b.tail_profile && a.nearest_equilibrium == b.nearest_equilibrium &&
           a.distance == b.distance;
  }
};

struct CampaignResult {
  Json config;
  std::uint64_t config_hash = 0;
  std::uint64_t base_seed = 0;
  std::string code_version = kCodeVersion;
  /// Equilibrium points used for the nearest-equilibrium column.
  std::vector<Vector> equilibria;
  std::vector<ReplicaResult> replicas;
  /// histogram[s] = replicas localized on s sites.
  std::vector<std::uint64_t> support_histogram;
  /// Mean of the descending-sorted tail profile, per support size.
  std::map<int, Vector> mean_sorted_profile;

  [[nodiscard]] double support_fraction(int size) const {
    if (size < 0 || static_cast<std::size_t>(size) >= support_histogram.size()) return 0.0;
    return static_cast<double>(support_histogram[static_cast<std::size_t>(size)]) /
           static_cast<double>(replicas.size());
  }

  friend bool operator==(const CampaignResult& a, const CampaignResult& b) {
    return a.config == b.config && a.config_hash == b.config_hash && a.base_seed == b.base_seed &&
           a.code_version == b.code_version && a.equilibria == b.equilibria &&
           a.replicas == b.replicas && a.support_histogram == b.support_histogram &&
           a.mean_sorted_profile == b.mean_sorted_profile;
  }
};

/// Index and Euclidean distance of the closest point.
inline std::pair<int, double> nearest_point(const Vector& v, const std::vector<Vector>& points) {
  int best = -1;
  double dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d = (v - points[i]).norm();
    if (d < dist) {
      dist = d;
      best = static_cast<int>(i);
    }
  }
  return {best, best < 0 ? 0.0 : dist};
}

inline ReplicaResult run_replica(const ExperimentConfig& cfg, std::uint64_t r,
                                 const std::vector<Vector>& equilibria) {
  ReplicaResult out;
  out.replica = r;
  out.seed = replica_seed(cfg.base_seed, r);
  out.start = cfg.start ? *cfg.start
                        : static_cast<int>(mix64(out.seed, 0x7374617274ULL) %
                                           static_cast<std::uint64_t>(cfg.model.size()));
  SimulateOptions opt;
  opt.full_log_limit = 0;
  opt.extra_checkpoints = {tail_start(cfg.horizon, cfg.detection.tail_fraction)};
  const TrajectoryRecord rec = simulate(cfg.model, out.start, cfg.horizon, out.seed, opt);
  const Localization loc = detect_localization(rec, cfg.detection.tail_fraction, cfg.detection.min_share);
  out.support = loc.support;
  out.tail_profile = loc.profile;
  out.final_occupation = rec.final_occupation().coords();
  std::tie(out.nearest_equilibrium, out.distance) = nearest_point(out.final_occupation, equilibria);
  return out;
}

inline void aggregate(CampaignResult& res, int n) {
  res.support_histogram.assign(static_cast<std::size_t>(n) + 1, 0);
  res.mean_sorted_profile.clear();
  for (const auto& r : res.replicas) {
    const int s = static_cast<int>(r.support.size());
    ++res.support_histogram[static_cast<std::size_t>(s)];
    std::vector<double> sorted(r.tail_profile.data(), r.tail_profile.data() + r.tail_profile.size());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    Vector v = Eigen::Map<Vector>(sorted.data(), static_cast<Eigen::Index>(sorted.size()));
    auto [it, inserted] = res.mean_sorted_profile.try_emplace(s, Vector::Zero(n));
    it->second += v;
  }
  for (auto& [s, v] : res.mean_sorted_profile)
    v /= static_cast<double>(res.support_histogram[static_cast<std::size_t>(s)]);
}

/// Runs every replica of the campaign on `threads` workers. Replica r always
/// uses seed mix(base_seed, r) and lands in slot r, so the result does not
/// depend on the schedule. `order` optionally permutes the execution order.
inline CampaignResult run_campaign(const ExperimentConfig& cfg, unsigned threads = 1,
                                   const std::vector<std::uint64_t>& order = {}) {
  cfg.validate();
  CampaignResult res;
  res.config = config_to_json(cfg);
  res.config_hash = config_hash(cfg);
  res.base_seed = cfg.base_seed;
  if (is_complete_family(cfg.model) && cfg.model.size() <= kMaxEnumerationSites) {
    for (const auto& e : enumerate_all(cfg.model.size(), cfg.model.alpha, cfg.model.loop_c))
      res.equilibria.push_back(e.point.coords());
  }
  res.replicas.resize(static_cast<std::size_t>(cfg.replicas));

  std::vector<std::uint64_t> schedule = order;
  if (schedule.empty()) {
    schedule.resize(static_cast<std::size_t>(cfg.replicas));
    for (std::uint64_t r = 0; r < cfg.replicas; ++r) schedule[static_cast<std::size_t>(r)] = r;
  }
  {
    std::vector<bool> seen(static_cast<std::size_t>(cfg.replicas), false);
    for (auto r : schedule) {
      if (r >= cfg.replicas || seen[static_cast<std::size_t>(r)]) {
        throw Error(ErrorKind::Config, "order must list every replica exactly once");
      }
      seen[static_cast<std::size_t>(r)] = true;
    }
    if (schedule.size() != cfg.replicas) throw Error(ErrorKind::Config, "order must list every replica exactly once");
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= schedule.size()) return;
      const std::uint64_t r = schedule[i];
      try {
        res.replicas[static_cast<std::size_t>(r)] = run_replica(cfg, r, res.equilibria);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  threads = std::max(1u, threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  aggregate(res, cfg.model.size());
  return res;
}

struct ConvergenceDiagnostics {
  std::vector<std::uint64_t> n;
  /// distances[c][e]: Euclidean distance of checkpoint c to equilibrium e.
  std::vector<std::vector<double>> distances;
  std::vector<int> nearest;
  /// Nearest equilibrium at the last checkpoint.
  int target = -1;
  /// Least-squares slope of -log dist(v_n, target) against log n over the
  /// final decade of checkpoints.
  std::optional<double> decay_exponent;
};

inline ConvergenceDiagnostics convergence_diagnostics(const TrajectoryRecord& rec,
                                                      const std::vector<Equilibrium>& eqs) {
  if (rec.checkpoints.size() < 3) {
    throw Error(ErrorKind::InsufficientData, "need at least 3 checkpoints, have " +
                                                 std::to_string(rec.checkpoints.size()));
  }
  if (eqs.empty()) throw Error(ErrorKind::InsufficientData, "no equilibria to compare against");
  std::vector<Vector> points;
  for (const auto& e : eqs) points.push_back(e.point.coords());

  ConvergenceDiagnostics out;
  for (const auto& cp : rec.checkpoints) {
    const Vector v = cp.occupation().coords();
    std::vector<double> d;
    for (const auto& p : points) d.push_back((v - p).norm());
    out.n.push_back(cp.n);
    out.nearest.push_back(static_cast<int>(std::min_element(d.begin(), d.end()) - d.begin()));
    out.distances.push_back(std::move(d));
  }
  out.target = out.nearest.back();

  const double last = static_cast<double>(out.n.back());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int m = 0;
  for (std::size_t c = 0; c < out.n.size(); ++c) {
    const double nn = static_cast<double>(out.n[c]);
    const double d = out.distances[c][static_cast<std::size_t>(out.target)];
    if (nn < last / 10.0 || nn < 1.0 || !(d > 0.0)) continue;
    const double x = std::log(nn);
    const double y = std::log(d);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m >= 2) {
    const double den = m * sxx - sx * sx;
    if (den > 0.0) out.decay_exponent = -(m * sxy - sx * sy) / den;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Export

inline Json vector_to_json(const Vector& v) {
  return Json(std::vector<double>(v.data(), v.data() + v.size()));
}
inline Vector vector_from_json(const Json& j) {
  const auto x = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
}

inline Json campaign_to_json(const CampaignResult& res) {
  Json reps = Json::array();
  for (const auto& r : res.replicas) {
    std::vector<int> labels = r.support;
    for (int& x : labels) ++x;
    reps.push_back({{"replica", r.replica},
                    {"seed", r.seed},
                    {"start", r.start + 1},
                    {"support", labels},
                    {"final_occupation", vector_to_json(r.final_occupation)},
                    {"tail_profile", vector_to_json(r.tail_profile)},
                    {"nearest_eq", r.nearest_equilibrium},
                    {"dist", r.distance}});
  }
  Json eqs = Json::array();
  for (const auto& e : res.equilibria) eqs.push_back(vector_to_json(e));
  Json profiles = Json::object();
  for (const auto& [s, v] : res.mean_sorted_profile) profiles[std::to_string(s)] = vector_to_json(v);
  return Json{{"config", res.config},
              {"config_hash", hex64(res.config_hash)},
              {"base_seed", res.base_seed},
              {"code_version", res.code_version},
              {"equilibria", std::move(eqs)},
              {"replicas", std::move(reps)},
              {"support_histogram", res.support_histogram},
              {"mean_sorted_profile", std::move(profiles)}};
}

inline CampaignResult campaign_from_json(const Json& j) {
  try {
    CampaignResult res;
    res.config = j.at("config");
    res.config_hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
    res.base_seed = j.at("base_seed").get<std::uint64_t>();
    res.code_version = j.at("code_version").get<std::string>();
    for (const auto& e : j.at("equilibria")) res.equilibria.push_back(vector_from_json(e));
    for (const auto& r : j.at("replicas")) {
      ReplicaResult x;
      x.replica = r.at("replica").get<std::uint64_t>();
      x.seed = r.at("seed").get<std::uint64_t>();
      x.start = r.at("start").get<int>() - 1;
      x.support = r.at("support").get<std::vector<int>>();
      for (int& s : x.support) --s;
      x.final_occupation = vector_from_json(r.at("final_occupation"));
      x.tail_profile = vector_from_json(r.at("tail_profile"));
      x.nearest_equilibrium = r.at("nearest_eq").get<int>();
      x.distance = r.at("dist").get<double>();
      res.replicas.push_back(std::move(x));
    }
    res.support_histogram = j.at("support_histogram").get<std::vector<std::uint64_t>>();
    for (const auto& [key, v] : j.at("mean_sorted_profile").items())
      res.mean_sorted_profile[std::stoi(key)] = vector_from_json(v);
    return res;
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::Config, std::string("malformed campaign result: ") + e.what());
  }
}

/// Columns replica, seed, support_size, support, occ_1..occ_N, nearest_eq, dist.
/// Support is written as 1-based labels joined by ';'; nearest_eq is 0-based
/// into the equilibria list (-1 when unavailable).
inline void write_campaign_csv(std::ostream& os, const CampaignResult& res) {
  const int n = res.replicas.empty() ? 0 : static_cast<int>(res.replicas.front().final_occupation.size());
  os << "replica,seed,support_size,support";
  for (int i = 1; i <= n; ++i) os << ",occ_" << i;
  os << ",nearest_eq,dist\n";
  for (const auto& r : res.replicas) {
    os << r.replica << ',' << r.seed << ',' << r.support.size() << ',';
    for (std::size_t k = 0; k < r.support.size(); ++k) os << (k ? ";" : "") << r.support[k] + 1;
    for (int i = 0; i < n; ++i) os << ',' << format_double(r.final_occupation(i));
    os << ',' << r.nearest_equilibrium << ',' << format_double(r.distance) << '\n';
  }
}

}  // namespace vrrw
