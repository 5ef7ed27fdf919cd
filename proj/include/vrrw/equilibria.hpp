#pragma once

// Equilibria of the mean-field flow on the complete graph: face centers and
// two-level points, their tangent spectra and stability verdicts, and the
// critical exponents separating the localization regimes.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "vrrw/dynamics.hpp"
#include "vrrw/error.hpp"
#include "vrrw/graph_model.hpp"
#include "vrrw/roots.hpp"

namespace vrrw {

enum class EquilibriumKind { FaceCenter, TwoLevel };
enum class Verdict { Stable, Unstable, Marginal };

inline const char* to_string(EquilibriumKind k) {
  return k == EquilibriumKind::FaceCenter ? "face_center" : "two_level";
}
inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Stable: return "stable";
    case Verdict::Unstable: return "unstable";
    case Verdict::Marginal: return "marginal";
  }
  return "unknown";
}

/// Coordinates u1 on k sites of the face and u2 = t u1 on the others.
struct TwoLevelData {
  int k;
  double t;
  double u1;
  double u2;
};

struct Equilibrium {
  SimplexPoint point;
  FaceIndex support;
  EquilibriumKind kind;
  std::optional<TwoLevelData> two_level;
  /// Spectrum of DF on the tangent space of the support face, descending.
  std::vector<double> tangent_eigenvalues;
  /// Rayleigh quotients of DF along e_i - v for sites off the support.
  std::vector<double> normal_eigenvalues;
  std::optional<Verdict> verdict;
  bool symmetric_fallback = false;

  [[nodiscard]] double ratio() const { return two_level ? two_level->t : 1.0; }
};

namespace margin {
inline constexpr double kEquilibrium = 1e-10;
inline constexpr double kVerdict = 1e-8;
inline constexpr double kImaginary = 1e-8;
}  // namespace margin

inline SimplexPoint face_center(const FaceIndex& face, int n) {
  if (face.sites().back() >= n) {
    throw Error(ErrorKind::InvalidFace, "face does not fit in N = " + std::to_string(n));
  }
  Vector v = Vector::Zero(n);
  for (int i : face.sites()) v(i) = 1.0 / face.size();
  return SimplexPoint(std::move(v));
}

/// Eigenvalue of DF on every e_i - e_j inside a size-k face center:
/// -1 + alpha (k - 2 + 2c) / (k - 1 + c). With c = 0 this is
/// -1 + alpha (k - 2) / (k - 1).
inline double center_eigenvalue(int k, double alpha, double c = 0.0) {
  if (k < 2) throw Error(ErrorKind::Domain, "center eigenvalue needs k >= 2");
  if (!(alpha > 1.0)) throw Error(ErrorKind::Domain, "alpha must be > 1");
  if (c == 0.0) return -1.0 + alpha * static_cast<double>(k - 2) / static_cast<double>(k - 1);
  return -1.0 + alpha * (k - 2.0 + 2.0 * c) / (k - 1.0 + c);
}

/// (k - 1) / (k - 2): above it, no more than k - 1 sites survive.
inline double critical_alpha(int k) {
  if (k < 3) throw Error(ErrorKind::Domain, "no finite critical exponent for k < 3");
  return static_cast<double>(k - 1) / static_cast<double>(k - 2);
}

/// [k - (1 - c)] / [k - 2 (1 - c)] for the loop model.
inline double critical_alpha_loop(int k, double c) {
  if (k < 2) throw Error(ErrorKind::Domain, "critical exponent needs k >= 2");
  if (!(c >= 0.0 && c < 1.0)) throw Error(ErrorKind::Domain, "loop weight c must lie in [0, 1)");
  const double den = k - 2.0 * (1.0 - c);
  if (den == 0.0) {
    throw Error(ErrorKind::Pole, "critical exponent has a pole at k = 2(1 - c) = " +
                                     std::to_string(k));
  }
  return (k - (1.0 - c)) / den;
}

struct ThresholdRow {
  int k;
  double alpha_crit;
  double loop_c;
};

/// Critical exponents for k = 2..kmax, skipping the pole (k = 2 when c = 0).
inline std::vector<ThresholdRow> threshold_table(double c, int kmax) {
  if (kmax < 2) throw Error(ErrorKind::Domain, "kmax must be >= 2");
  std::vector<ThresholdRow> rows;
  for (int k = 2; k <= kmax; ++k) {
    if (k - 2.0 * (1.0 - c) == 0.0) continue;
    const double a = (c == 0.0) ? critical_alpha(k) : critical_alpha_loop(k, c);
    rows.push_back({k, a, c});
  }
  return rows;
}

namespace detail {
inline void check_phi_domain(double t, int n, int k) {
  if (!(t > 0.0)) throw Error(ErrorKind::Domain, "phi is defined for t > 0 only");
  if (k < 1 || k > n - 1) throw Error(ErrorKind::Domain, "phi needs 1 <= k <= N - 1");
}
}  // namespace detail

/// phi(t) = -(N-k-1) t^(2a-1) + (N-k) t^a - k t^(a-1) + (k-1). A two-level
/// point with ratio t is an equilibrium iff phi(t) = 0; phi(1) = 0 always.
inline double phi(double t, int n, int k, double alpha) {
  detail::check_phi_domain(t, n, k);
  const double nk = n - k;
  return -(nk - 1.0) * std::pow(t, 2.0 * alpha - 1.0) + nk * std::pow(t, alpha) -
         k * std::pow(t, alpha - 1.0) + (k - 1.0);
}

/// psi with phi'(t) = t^(a-2) psi(t); strictly concave.
inline double psi(double t, int n, int k, double alpha) {
  detail::check_phi_domain(t, n, k);
  const double nk = n - k;
  return -(2.0 * alpha - 1.0) * (nk - 1.0) * std::pow(t, alpha) + alpha * nk * t -
         (alpha - 1.0) * k;
}

inline double phi_prime(double t, int n, int k, double alpha) {
  return std::pow(t, alpha - 2.0) * psi(t, n, k, alpha);
}

/// Point of the n-simplex with u1 = 1/(k + (n-k) t) on the first k sites
/// and u2 = t u1 on the rest.
inline Vector two_level_coords(int n, int k, double t) {
  const double u1 = 1.0 / (k + (n - k) * t);
  Vector v(n);
  v.head(k).setConstant(u1);
  v.tail(n - k).setConstant(t * u1);
  return v;
}

/// Every ratio t != 1 at which the size-m two-level curve with k low-index
/// sites is an equilibrium. For c = 0 these are the zeros of phi (deflated by
/// t - 1); for the loop model the residual of F along the curve is scanned.
inline std::vector<double> two_level_ratios(int m, int k, double alpha, double c = 0.0,
                                            const RootScanOptions& opt = {}) {
  if (k < 1 || 2 * k > m) throw Error(ErrorKind::Domain, "two-level solve needs 1 <= k <= N/2");
  if (!(alpha > 1.0)) throw Error(ErrorKind::Domain, "alpha must be > 1");
  auto deflate = [](double value, double t) { return value / (t - 1.0); };
  std::vector<double> roots;
  if (c == 0.0) {
    roots = scan_roots_log_grid(
        [&](double t) {
          if (std::abs(t - 1.0) < 1e-12) return std::numeric_limits<double>::quiet_NaN();
          return deflate(phi(t, m, k, alpha), t);
        },
        opt);
  } else {
    const ModelParameters p = ModelParameters::loop_model(m, alpha, c);
    roots = scan_roots_log_grid(
        [&](double t) {
          if (std::abs(t - 1.0) < 1e-12) return std::numeric_limits<double>::quiet_NaN();
          const Vector f = vector_field(p, two_level_coords(m, k, t));
          return deflate(f(m - 1), t);
        },
        opt);
  }
  std::erase_if(roots, [](double t) { return std::abs(t - 1.0) < 1e-9; });
  return roots;
}

inline Equilibrium make_two_level(int n, int k, double t) {
  Vector v = two_level_coords(n, k, t);
  const double u1 = v(0);
  const double u2 = v(n - 1);
  return Equilibrium{SimplexPoint(std::move(v)), FaceIndex::full(n), EquilibriumKind::TwoLevel,
                     TwoLevelData{k, t, u1, u2}, {}, {}, std::nullopt, false};
}

/// Two-level equilibria of the complete graph on N sites whose first k
/// coordinates are equal; at most two.
inline std::vector<Equilibrium> solve_two_level(int n, int k, double alpha) {
  const ModelParameters p = ModelParameters::complete(n, alpha);
  std::vector<Equilibrium> out;
  for (double t : two_level_ratios(n, k, alpha)) {
    Equilibrium e = make_two_level(n, k, t);
    if (vector_field(p, e.point).lpNorm<Eigen::Infinity>() >= margin::kEquilibrium) {
      throw Error(ErrorKind::Convergence, "two-level root t = " + std::to_string(t) +
                                              " does not annihilate F");
    }
    out.push_back(std::move(e));
  }
  return out;
}

/// lambda_m = (alpha - 1) - alpha u_m^(2 alpha - 1) / H(v): the eigenvalue of
/// DF on differences of equal coordinates u_m.
inline double level_eigenvalue(const ModelParameters& p, const SimplexPoint& v, double u) {
  return (p.alpha - 1.0) - p.alpha * std::pow(u, 2.0 * p.alpha - 1.0) / lyapunov(p, v);
}

/// Direction e_k inside the support: -(m - k) on the k low sites, k on the rest.
inline Vector two_level_direction(const Equilibrium& e) {
  if (!e.two_level) throw Error(ErrorKind::Domain, "not a two-level equilibrium");
  const int m = e.support.size();
  const int k = e.two_level->k;
  Vector d = Vector::Zero(e.point.size());
  // The u1 group is the set of support sites carrying the value u1.
  for (int i : e.support.sites()) {
    const bool low = std::abs(e.point[i] - e.two_level->u1) <= std::abs(e.point[i] - e.two_level->u2);
    d(i) = low ? -(m - k) : k;
  }
  return d;
}

/// Eigenvalue of DF along e_k (the symmetric direction of a two-level point).
inline double two_level_direction_eigenvalue(const ModelParameters& p, const Equilibrium& e) {
  const Vector d = two_level_direction(e);
  const Matrix j = jacobian(p, e.point);
  return (j * d).dot(d) / d.squaredNorm();
}

namespace detail {

inline Matrix restrict_to(const Matrix& j, const std::vector<int>& sites) {
  const auto m = static_cast<Eigen::Index>(sites.size());
  Matrix out(m, m);
  for (Eigen::Index r = 0; r < m; ++r)
    for (Eigen::Index c = 0; c < m; ++c) out(r, c) = j(sites[r], sites[c]);
  return out;
}

/// Spectrum on sum(x) = 0 in the basis e_i - e_last.
inline std::pair<std::vector<double>, bool> tangent_spectrum(const Matrix& face_j,
                                                              const Vector& face_v) {
  const auto m = face_j.rows();
  std::vector<double> eig;
  if (m < 2) return {eig, false};
  Matrix basis = Matrix::Zero(m, m - 1);
  for (Eigen::Index i = 0; i < m - 1; ++i) {
    basis(i, i) = 1.0;
    basis(m - 1, i) = -1.0;
  }
  const Matrix reduced = (face_j * basis).topRows(m - 1);
  Eigen::EigenSolver<Matrix> solver(reduced, false);
  const auto& values = solver.eigenvalues();
  bool fallback = values.imag().cwiseAbs().maxCoeff() > margin::kImaginary;
  if (!fallback) {
    for (Eigen::Index i = 0; i < values.size(); ++i) eig.push_back(values(i).real());
  } else {
    // DF diag(v) is symmetric at equilibria, so diag(v)^(-1/2) DF diag(v)^(1/2)
    // is symmetric and its restriction to sqrt(v)^perp is the tangent map.
    const Vector root = face_v.cwiseSqrt();
    const Matrix sym0 = root.cwiseInverse().asDiagonal() * face_j * root.asDiagonal();
    const Matrix sym = 0.5 * (sym0 + sym0.transpose());
    Eigen::HouseholderQR<Matrix> qr(root);
    const Matrix q = qr.householderQ();
    const Matrix perp = q.rightCols(m - 1);
    Eigen::SelfAdjointEigenSolver<Matrix> sym_solver(perp.transpose() * sym * perp, Eigen::EigenvaluesOnly);
    for (Eigen::Index i = 0; i < m - 1; ++i) eig.push_back(sym_solver.eigenvalues()(i));
  }
  std::sort(eig.begin(), eig.end(), std::greater<>());
  return {eig, fallback};
}

}  // namespace detail

/// Fills the tangent spectrum, the off-face Rayleigh quotients and the verdict.
inline Equilibrium classify(const ModelParameters& p, Equilibrium e) {
  const double residual = vector_field(p, e.point).lpNorm<Eigen::Infinity>();
  if (!(residual < margin::kEquilibrium)) {
    throw Error(ErrorKind::Domain, "classify needs an equilibrium, |F| = " + std::to_string(residual));
  }
  const Matrix j = jacobian(p, e.point);
  const auto& sites = e.support.sites();
  Vector face_v(static_cast<Eigen::Index>(sites.size()));
  for (std::size_t i = 0; i < sites.size(); ++i) face_v(static_cast<Eigen::Index>(i)) = e.point[sites[i]];
  auto [tangent, fallback] = detail::tangent_spectrum(detail::restrict_to(j, sites), face_v);
  e.tangent_eigenvalues = std::move(tangent);
  e.symmetric_fallback = fallback;

  e.normal_eigenvalues.clear();
  for (int i = 0; i < p.size(); ++i) {
    if (e.support.contains(i)) continue;
    Vector d = -e.point.coords();
    d(i) += 1.0;
    e.normal_eigenvalues.push_back((j * d).dot(d) / d.squaredNorm());
  }

  double top = -std::numeric_limits<double>::infinity();
  for (double x : e.tangent_eigenvalues) top = std::max(top, x);
  for (double x : e.normal_eigenvalues) top = std::max(top, x);
  if (top < -margin::kVerdict) {
    e.verdict = Verdict::Stable;
  } else if (top > margin::kVerdict) {
    e.verdict = Verdict::Unstable;
  } else {
    e.verdict = Verdict::Marginal;
  }
  return e;
}

/// Largest eigenvalue used for the verdict.
inline double leading_eigenvalue(const Equilibrium& e) {
  double top = -std::numeric_limits<double>::infinity();
  for (double x : e.tangent_eigenvalues) top = std::max(top, x);
  for (double x : e.normal_eigenvalues) top = std::max(top, x);
  return top;
}

/// Reporting order: support size, support, ratio t, then coordinates.
inline bool report_order(const Equilibrium& a, const Equilibrium& b) {
  if (a.support != b.support) return a.support < b.support;
  if (a.ratio() != b.ratio()) return a.ratio() < b.ratio();
  const Vector& x = a.point.coords();
  const Vector& y = b.point.coords();
  return std::lexicographical_compare(x.data(), x.data() + x.size(), y.data(), y.data() + y.size());
}

inline constexpr int kMaxEnumerationSites = 12;

/// All equilibria of the complete graph (or the loop model when c > 0):
/// for every face, its center and every two-level point of the face's own
/// problem in every placement. Unclassified; see `classify_all`.
inline std::vector<Equilibrium> enumerate_all(int n, double alpha, double c = 0.0) {
  if (n < 2) throw Error(ErrorKind::InvalidSize, "enumeration needs N >= 2");
  if (n > kMaxEnumerationSites) {
    throw Error(ErrorKind::Budget, "enumeration is limited to N <= " +
                                       std::to_string(kMaxEnumerationSites));
  }
  const ModelParameters p = c > 0.0 ? ModelParameters::loop_model(n, alpha, c)
                                    : ModelParameters::complete(n, alpha);

  // Ratios depend only on the face size and k.
  std::vector<std::vector<std::vector<double>>> ratios(static_cast<std::size_t>(n) + 1);
  for (int m = 2; m <= n; ++m) {
    ratios[static_cast<std::size_t>(m)].resize(static_cast<std::size_t>(m / 2) + 1);
    for (int k = 1; 2 * k <= m; ++k) {
      ratios[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)] = two_level_ratios(m, k, alpha, c);
    }
  }

  std::vector<Equilibrium> out;
  const std::uint32_t full = (1u << n) - 1u;
  for (std::uint32_t mask = 1; mask <= full; ++mask) {
    const int m = std::popcount(mask);
    if (m == 1 && c == 0.0) continue;
    std::vector<int> sites;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) sites.push_back(i);
    FaceIndex face(sites, n);
    out.push_back(Equilibrium{face_center(face, n), face, EquilibriumKind::FaceCenter,
                              std::nullopt, {}, {}, std::nullopt, false});

    for (int k = 1; 2 * k <= m; ++k) {
      for (double t : ratios[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)]) {
        // With 2k = m, (S, t) and (complement, 1/t) are the same point.
        if (2 * k == m && t > 1.0) continue;
        const double u1 = 1.0 / (k + (m - k) * t);
        const double u2 = t * u1;
        // Subsets of `sites` of size k carry u1.
        std::vector<bool> pick(static_cast<std::size_t>(m), false);
        std::fill(pick.begin(), pick.begin() + k, true);
        do {
          Vector v = Vector::Zero(n);
          for (int s = 0; s < m; ++s) v(sites[static_cast<std::size_t>(s)]) = pick[static_cast<std::size_t>(s)] ? u1 : u2;
          v /= v.sum();
          out.push_back(Equilibrium{SimplexPoint(std::move(v)), face, EquilibriumKind::TwoLevel,
                                    TwoLevelData{k, t, u1, u2}, {}, {}, std::nullopt, false});
        } while (std::prev_permutation(pick.begin(), pick.end()));
      }
    }
  }

  for (const auto& e : out) {
    const double r = vector_field(p, e.point).lpNorm<Eigen::Infinity>();
    if (!(r < margin::kEquilibrium)) {
      throw Error(ErrorKind::Convergence, "enumerated point is not an equilibrium, |F| = " +
                                              std::to_string(r));
    }
  }
  std::stable_sort(out.begin(), out.end(), report_order);
  return out;
}

/// Classifies every equilibrium; work is split into contiguous index blocks
/// so the result does not depend on the thread count.
inline std::vector<Equilibrium> classify_all(const ModelParameters& p, std::vector<Equilibrium> eqs,
                                             unsigned threads = 1) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(eqs.size())));
  auto work = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) eqs[i] = classify(p, std::move(eqs[i]));
  };
  if (threads == 1) {
    work(0, eqs.size());
    return eqs;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> failures(threads);
  const std::size_t chunk = (eqs.size() + threads - 1) / threads;
  for (unsigned w = 0; w < threads; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(eqs.size(), lo + chunk);
    if (lo >= hi) continue;
    pool.emplace_back([&, w, lo, hi] {
      try {
        work(lo, hi);
      } catch (...) {
        failures[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);
  return eqs;
}

}  // namespace vrrw
