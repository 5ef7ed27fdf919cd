// Acceptance checks. Usage: vrrw_acceptance [criterion ...]; no arguments
// runs all of them. One PASS/FAIL line per criterion; exit status 1 if any
// requested criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "vrrw/vrrw.hpp"

using namespace vrrw;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

SimplexPoint dirichlet_point(std::mt19937_64& rng, int n) {
  std::exponential_distribution<double> e(1.0);
  Vector x(n);
  for (int i = 0; i < n; ++i) x(i) = e(rng);
  return project_to_simplex(x / x.sum());
}

// Invariant measure written out directly, for the finite-difference check.
Vector pi_raw(const ModelParameters& p, const Vector& v) {
  const Vector w = v.array().pow(p.alpha).matrix();
  const Vector s = p.matrix.entries() * w;
  const Vector ws = w.cwiseProduct(s);
  return ws / ws.sum();
}

Outcome thresholds() {
  double worst_exact = 0.0, worst_loop = 0.0;
  for (int k = 3; k <= 10; ++k) {
    const double expected = (k - 1.0) / (k - 2.0);
    worst_exact = std::max(worst_exact, std::abs(critical_alpha(k) - expected));
    worst_loop = std::max(worst_loop, std::abs(critical_alpha_loop(k, 0.0) - critical_alpha(k)));
  }
  return {worst_exact == 0.0 && worst_loop <= 1e-15,
          "max |critical_alpha - (k-1)/(k-2)| = " + fmt("%.3g", worst_exact) +
              ", max loop(c=0) gap = " + fmt("%.3g", worst_loop)};
}

Outcome center_spectrum() {
  double worst = 0.0;
  bool multiplicity_ok = true;
  const int n = 8;
  for (int k = 2; k <= 8; ++k)
    for (double alpha : {1.1, 1.5, 2.0, 3.0}) {
      const auto p = ModelParameters::complete(n, alpha);
      std::vector<int> sites(static_cast<std::size_t>(k));
      for (int i = 0; i < k; ++i) sites[static_cast<std::size_t>(i)] = i;
      const FaceIndex face(sites, n);
      const auto e = classify(p, Equilibrium{face_center(face, n), face, EquilibriumKind::FaceCenter,
                                             std::nullopt, {}, {}, std::nullopt, false});
      multiplicity_ok &= static_cast<int>(e.tangent_eigenvalues.size()) == k - 1;
      const double expected = -1.0 + alpha * (k - 2.0) / (k - 1.0);
      for (double l : e.tangent_eigenvalues) worst = std::max(worst, std::abs(l - expected));
    }
  return {multiplicity_ok && worst <= 1e-9,
          "max deviation " + fmt("%.3g", worst) + (multiplicity_ok ? ", multiplicity k-1" : ", wrong multiplicity")};
}

Outcome enumeration() {
  double worst_f = 0.0, worst_lambda = 0.0;
  std::size_t max_roots = 0;
  int interior_bad = 0, interior_total = 0;
  for (int n = 3; n <= 6; ++n)
    for (double alpha : {1.2, 1.4, 1.6, 2.5, 3.0}) {
      const auto p = ModelParameters::complete(n, alpha);
      const auto eqs = classify_all(p, enumerate_all(n, alpha));
      std::map<std::pair<std::vector<int>, int>, std::set<double>> roots;
      for (const auto& e : eqs) {
        worst_f = std::max(worst_f, vector_field(p, e.point).lpNorm<Eigen::Infinity>());
        if (e.kind != EquilibriumKind::TwoLevel) continue;
        const auto& d = *e.two_level;
        roots[{e.support.sites(), d.k}].insert(d.t);
        ++interior_total;
        if (e.verdict != Verdict::Unstable) ++interior_bad;
        // Levels with at least two sites carry the analytic eigenvalue.
        const int m = e.support.size();
        for (auto [u, count] : {std::pair{d.u1, d.k}, std::pair{d.u2, m - d.k}}) {
          if (count < 2) continue;
          const double lambda = level_eigenvalue(p, e.point, u);
          double best = std::numeric_limits<double>::infinity();
          for (double l : e.tangent_eigenvalues) best = std::min(best, std::abs(l - lambda));
          worst_lambda = std::max(worst_lambda, best);
        }
      }
      for (const auto& [key, ts] : roots) max_roots = std::max(max_roots, ts.size());
    }
  const bool pass = worst_f < 1e-10 && max_roots <= 2 && interior_bad == 0 && worst_lambda <= 1e-8;
  return {pass, "max |F| = " + fmt("%.3g", worst_f) + ", max roots per (face,k) = " +
                    std::to_string(max_roots) + ", unstable interior " +
                    std::to_string(interior_total - interior_bad) + "/" + std::to_string(interior_total) +
                    ", max level-eigenvalue gap " + fmt("%.3g", worst_lambda)};
}

Outcome jacobian_fd() {
  std::mt19937_64 rng(4);
  const auto p = ModelParameters::complete(4, 1.7);
  double worst = 0.0;
  const double h = 1e-7;
  for (int trial = 0; trial < 100; ++trial) {
    const SimplexPoint v = dirichlet_point(rng, 4);
    const Matrix j = jacobian(p, v);
    Matrix fd(4, 4);
    for (int c = 0; c < 4; ++c) {
      Vector plus = v.coords(), minus = v.coords();
      plus(c) += h;
      minus(c) -= h;
      fd.col(c) = (pi_raw(p, plus) - pi_raw(p, minus)) / (2 * h);
    }
    fd -= Matrix::Identity(4, 4);
    worst = std::max(worst, (j - fd).lpNorm<Eigen::Infinity>());
  }
  return {worst <= 1e-6, "max |J - J_fd| = " + fmt("%.3g", worst)};
}

Outcome lyapunov_check() {
  std::mt19937_64 rng(5);
  double min_dot = std::numeric_limits<double>::infinity();
  int strict_fail = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const int n = 3 + trial % 3;
    const auto p = ModelParameters::complete(n, 1.5);
    const SimplexPoint v = dirichlet_point(rng, n);
    const double d = lyapunov_derivative(p, v);
    min_dot = std::min(min_dot, d);
    if (vector_field(p, v).lpNorm<Eigen::Infinity>() > 1e-8 && !(d > 0.0)) ++strict_fail;
  }
  double worst_drop = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 3 + trial % 3;
    const auto p = ModelParameters::complete(n, 1.5);
    const auto traj = integrate_flow(p, dirichlet_point(rng, n), 50.0, 0.01);
    for (std::size_t k = 1; k < traj.lyapunov_values.size(); ++k)
      worst_drop = std::max(worst_drop, traj.lyapunov_values[k - 1] - traj.lyapunov_values[k]);
  }
  return {min_dot >= -1e-12 && strict_fail == 0 && worst_drop <= 1e-9,
          "min dH/dt = " + fmt("%.3g", min_dot) + ", strict failures " + std::to_string(strict_fail) +
              ", max per-step drop of H along flows " + fmt("%.3g", worst_drop)};
}

Outcome fundamental() {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double worst_res = 0.0, worst_pi = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 3 + trial % 3;
    const auto p = ModelParameters::complete(n, 1.2 + 0.02 * trial);
    const SimplexPoint v = dirichlet_point(rng, n);
    Vector g(n);
    for (int i = 0; i < n; ++i) g(i) = gauss(rng);
    const Matrix q = fundamental_matrix(p, v);
    const Matrix k = transition_kernel(p, 0.0, v).entries();
    const Vector pi = invariant_measure(p, v).coords();
    const Vector qg = q * g;
    const Vector res = (qg - k * qg) - (g - Vector::Constant(n, pi.dot(g)));
    worst_res = std::max(worst_res, res.lpNorm<Eigen::Infinity>());
    worst_pi = std::max(worst_pi, std::abs(pi.dot(qg)));
  }
  return {worst_res < 1e-10 && worst_pi <= 1e-12,
          "max Poisson residual " + fmt("%.3g", worst_res) + ", max |pi Q g| " + fmt("%.3g", worst_pi)};
}

const CampaignResult& campaign(double alpha) {
  static std::map<double, CampaignResult> cache;
  auto it = cache.find(alpha);
  if (it == cache.end()) {
    ExperimentConfig cfg{ModelParameters::complete(3, alpha)};
    cfg.replicas = 1000;
    cfg.horizon = 100000;
    cfg.base_seed = 20240601;
    it = cache.emplace(alpha, run_campaign(cfg, std::max(1u, std::thread::hardware_concurrency()))).first;
  }
  return it->second;
}

Outcome above_threshold() {
  const auto& res = campaign(2.5);
  const double frac2 = res.support_fraction(2);
  bool profile_ok = false;
  std::string profile = "none";
  if (auto it = res.mean_sorted_profile.find(2); it != res.mean_sorted_profile.end()) {
    profile_ok = std::abs(it->second(0) - 0.5) <= 0.05 && std::abs(it->second(1) - 0.5) <= 0.05;
    profile = fmt("%.4f", it->second(0)) + "/" + fmt("%.4f", it->second(1));
  }
  return {frac2 >= 0.99 && profile_ok,
          "fraction on exactly 2 sites " + fmt("%.4f", frac2) + ", mean tail profile " + profile};
}

Outcome below_threshold() {
  const auto& res = campaign(1.5);
  const double f2 = res.support_fraction(2), f3 = res.support_fraction(3);
  return {f2 >= 0.01 && f3 >= 0.01,
          "support 2: " + fmt("%.4f", f2) + ", support 3: " + fmt("%.4f", f3)};
}

Outcome avoids_center() {
  const auto& res = campaign(2.5);
  const Vector c = SimplexPoint::center(3).coords();
  std::size_t far = 0;
  for (const auto& r : res.replicas) far += (r.final_occupation - c).norm() > 0.1;
  const double frac = static_cast<double>(far) / static_cast<double>(res.replicas.size());
  return {frac >= 0.99, "fraction farther than 0.1 from the center " + fmt("%.4f", frac)};
}

Outcome rubin_equivalence() {
  constexpr int kSteps = 50;
  constexpr int kSeeds = 10000;
  double worst = 0.0;
  for (double alpha : {1.5, 2.5}) {
    const auto p = ModelParameters::complete(3, alpha);
    const auto clocks = ClockConfig::power(Graph::complete(3), alpha);
    // counts[step][from * 3 + to]
    std::vector<std::array<double, 9>> a(kSteps, std::array<double, 9>{}), b = a;
    for (int s = 0; s < kSeeds; ++s) {
      const auto walk = simulate(p, 0, kSteps, mix64(1, static_cast<std::uint64_t>(s)));
      const auto emb = rubin_simulate(clocks, 0, kSteps, mix64(2, static_cast<std::uint64_t>(s)));
      for (int t = 0; t < kSteps; ++t) {
        const auto ts = static_cast<std::size_t>(t);
        a[ts][static_cast<std::size_t>(walk.sites[ts] * 3 + walk.sites[ts + 1])] += 1.0 / kSeeds;
        b[ts][static_cast<std::size_t>(emb.record.sites[ts] * 3 + emb.record.sites[ts + 1])] += 1.0 / kSeeds;
      }
    }
    for (int t = 0; t < kSteps; ++t) {
      double tv = 0.0;
      for (int c = 0; c < 9; ++c)
        tv += std::abs(a[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)] -
                       b[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)]);
      worst = std::max(worst, 0.5 * tv);
    }
  }
  return {worst < 0.05, "max per-step total variation " + fmt("%.4f", worst)};
}

Outcome trap_event() {
  const int d = 3;
  const std::uint64_t first = 5;
  const auto clocks = ClockConfig::power(Graph::star(d), 3.0);
  const TrapBound bound = trap_probability_bound(d, clocks, first, 1'000'000);
  const TrapEventSampler sample(d, clocks, first);
  Rng rng(31337);
  const int draws = 100000;
  int hits = 0;
  for (int i = 0; i < draws; ++i) hits += sample(rng);
  const double mc = static_cast<double>(hits) / draws;
  const double sigma = std::sqrt(bound.value * (1.0 - bound.value) / draws);
  const bool matches = std::abs(mc - bound.value) <= 3.0 * sigma;
  const bool above = mc >= bound.lower();
  return {matches && above, "MC " + fmt("%.5f", mc) + " vs product " + fmt("%.5f", bound.value) +
                                " (3 sigma = " + fmt("%.5f", 3 * sigma) + "): " +
                                (matches ? "match" : "no match") + "; lower bound " +
                                (above ? "holds" : "violated")};
}

Outcome loop_consistency() {
  bool identical = true;
  for (int n : {3, 5})
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto p = ModelParameters::complete(n, 2.2);
      WalkState a = init_walk(p, 0), b = a;
      Rng ra(seed), rb(seed);
      for (int i = 0; i < 10000 && identical; ++i) {
        a = step(p, a, ra);
        b = step_loop_model(p, b, rb);
        identical = a == b;
      }
    }
  double worst = 0.0;
  const double c = 0.5;
  for (const auto& row : threshold_table(c, 10))
    worst = std::max(worst, std::abs(row.alpha_crit - (row.k - (1 - c)) / (row.k - 2 * (1 - c))));
  return {identical && worst <= 1e-15, std::string(identical ? "trajectories identical" : "trajectories differ") +
                                           ", max table deviation " + fmt("%.3g", worst)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::pair<const char*, std::function<Outcome()>>> criteria{
      {1, {"threshold formulas", thresholds}},
      {2, {"center spectrum", center_spectrum}},
      {3, {"equilibria enumeration", enumeration}},
      {4, {"jacobian vs finite differences", jacobian_fd}},
      {5, {"lyapunov function", lyapunov_check}},
      {6, {"fundamental matrix", fundamental}},
      {7, {"localization above threshold", above_threshold}},
      {8, {"both supports below threshold", below_threshold}},
      {9, {"no convergence to the unstable center", avoids_center}},
      {10, {"clock embedding has the walk's law", rubin_equivalence}},
      {11, {"trap event probability", trap_event}},
      {12, {"loop model consistency", loop_consistency}},
  };
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  if (wanted.empty())
    for (const auto& [k, v] : criteria) wanted.push_back(k);

  bool all = true;
  for (int k : wanted) {
    const auto it = criteria.find(k);
    if (it == criteria.end()) {
      std::printf("FAIL %2d unknown criterion\n", k);
      all = false;
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o{false, ""};
    try {
      o = it->second.second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2d %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", k, it->second.first, o.detail.c_str(), secs);
    std::fflush(stdout);
    all &= o.pass;
  }
  return all ? 0 : 1;
}
