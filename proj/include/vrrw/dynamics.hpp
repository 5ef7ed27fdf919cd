#pragma once

// Mean-field objects of the reinforced walk: the frozen kernel K(eps, v),
// the Lyapunov function H, the reversible measure pi, the vector field
// F(v) = -v + pi(iota(v)), its Jacobian, the fundamental matrix of K(v) and
// a fixed-step flow integrator.

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vrrw/error.hpp"
#include "vrrw/graph_model.hpp"

namespace vrrw {

struct ModelParameters {
  InteractionMatrix matrix;
  double alpha;
  /// Weight of the self-jump in the interpolating loop model; 0 is the
  /// loop-free walk. The analytic routines read the diagonal of `matrix`, so
  /// loop models should be built with `loop_model`.
  double loop_c = 0.0;

  ModelParameters(InteractionMatrix a, double alpha_, double c = 0.0)
      : matrix(std::move(a)), alpha(alpha_), loop_c(c) {
    if (!(alpha > 1.0) || !std::isfinite(alpha)) {
      throw Error(ErrorKind::Domain, "alpha must be > 1, got " + std::to_string(alpha));
    }
    if (!(loop_c >= 0.0) || !std::isfinite(loop_c)) {
      throw Error(ErrorKind::Domain, "loop weight c must be >= 0");
    }
  }

  static ModelParameters complete(int n, double alpha) {
    return {complete_graph(n), alpha, 0.0};
  }
  static ModelParameters loop_model(int n, double alpha, double c) {
    return {loop_complete_graph(n, c), alpha, c};
  }

  [[nodiscard]] int size() const noexcept { return matrix.size(); }
};

/// Row-stochastic matrix.
class StochasticMatrix {
 public:
  explicit StochasticMatrix(Matrix entries) : entries_(std::move(entries)) {}

  [[nodiscard]] const Matrix& entries() const noexcept { return entries_; }
  [[nodiscard]] double operator()(int i, int j) const { return entries_(i, j); }
  [[nodiscard]] int size() const noexcept { return static_cast<int>(entries_.rows()); }

 private:
  Matrix entries_;
};

/// Elements of T_0 (components summing to zero).
using TangentVector = Vector;

namespace detail {

/// x^alpha for x >= 0, switching to log space when the exponent is extreme.
inline double pow_alpha(double x, double alpha) {
  if (x == 0.0) return 0.0;
  const double lx = std::log(x);
  if (alpha * std::abs(lx) > 600.0) return std::exp(alpha * lx);
  return std::pow(x, alpha);
}

inline Vector pow_alpha(const Vector& v, double alpha) {
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = pow_alpha(v(i), alpha);
  return out;
}

inline void require_size(const ModelParameters& p, Eigen::Index n) {
  if (n != p.size()) {
    throw Error(ErrorKind::InvalidSize, "point has " + std::to_string(n) +
                                            " coordinates, model has " +
                                            std::to_string(p.size()) + " sites");
  }
}

/// Terms shared by pi, grad H and the Jacobian.
struct MeanFieldTerms {
  Vector w;   // v^alpha
  Vector g;   // v^(alpha-1)
  Vector s;   // A v^alpha
  double h;   // H(v)
};

inline MeanFieldTerms mean_field_terms(const ModelParameters& p, const Vector& v) {
  require_size(p, v.size());
  MeanFieldTerms t;
  t.w = pow_alpha(v, p.alpha);
  t.g = pow_alpha(v, p.alpha - 1.0);
  t.s = p.matrix.entries() * t.w;
  t.h = t.w.dot(t.s);
  if (!(t.h > 0.0) || !std::isfinite(t.h)) {
    throw Error(ErrorKind::DegenerateSupport, "H(v) = 0: support of v carries no interaction");
  }
  return t;
}

}  // namespace detail

inline StochasticMatrix transition_kernel(const ModelParameters& p, double eps,
                                          const SimplexPoint& v) {
  detail::require_size(p, v.size());
  if (!(eps >= 0.0) || !std::isfinite(eps)) {
    throw Error(ErrorKind::Domain, "kernel offset eps must be >= 0");
  }
  const int n = p.size();
  Vector shifted = v.coords().array() + eps;
  const Vector w = detail::pow_alpha(shifted, p.alpha);
  Matrix k(n, n);
  for (int i = 0; i < n; ++i) {
    double denom = 0.0;
    for (int j = 0; j < n; ++j) {
      k(i, j) = p.matrix(i, j) * w(j);
      denom += k(i, j);
    }
    if (!(denom > 0.0)) {
      throw Error(ErrorKind::DegenerateKernel,
                  "row " + std::to_string(i + 1) + " has zero total weight at eps = 0");
    }
    k.row(i) /= denom;
  }
  return StochasticMatrix(std::move(k));
}

/// H(v) = <A v^alpha, v^alpha>.
inline double lyapunov(const ModelParameters& p, const SimplexPoint& v) {
  detail::require_size(p, v.size());
  const Vector w = detail::pow_alpha(v.coords(), p.alpha);
  return w.dot(p.matrix.entries() * w);
}

/// pi_i(v) = v_i^alpha (A v^alpha)_i / H(v), the reversible measure of K(v).
inline SimplexPoint invariant_measure(const ModelParameters& p, const SimplexPoint& v) {
  const auto t = detail::mean_field_terms(p, v.coords());
  Vector pi = t.w.cwiseProduct(t.s) / t.h;
  pi /= pi.sum();
  return SimplexPoint(std::move(pi));
}

/// F(v) = -v + pi(iota(v)) on the affine hyperplane sum(v) = 1.
inline TangentVector vector_field(const ModelParameters& p, const Vector& v) {
  detail::require_size(p, v.size());
  if (!v.allFinite() || std::abs(v.sum() - 1.0) > 1e-9) {
    throw Error(ErrorKind::Domain, "vector field is defined on sum(v) = 1 only");
  }
  const SimplexPoint projected = project_to_simplex(v);
  return -v + invariant_measure(p, projected).coords();
}

inline TangentVector vector_field(const ModelParameters& p, const SimplexPoint& v) {
  return vector_field(p, v.coords());
}

/// grad H(v), with d_i H = 2 alpha v_i^(alpha-1) (A v^alpha)_i.
inline Vector lyapunov_gradient(const ModelParameters& p, const SimplexPoint& v) {
  const auto t = detail::mean_field_terms(p, v.coords());
  return 2.0 * p.alpha * t.g.cwiseProduct(t.s);
}

/// <grad H(v), F(v)>, evaluated as (2 alpha / H) times the v-weighted
/// variance of g_i = v_i^(alpha-1) (A v^alpha)_i, which is algebraically equal
/// and never negative.
inline double lyapunov_derivative(const ModelParameters& p, const SimplexPoint& v) {
  const auto t = detail::mean_field_terms(p, v.coords());
  const Vector g = t.g.cwiseProduct(t.s);
  const double mean = v.coords().dot(g);
  double var = 0.0;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const double d = g(i) - mean;
    var += v[static_cast<int>(i)] * d * d;
  }
  return 2.0 * p.alpha * var / t.h;
}

/// DF(v) from the closed-form derivative of pi:
///   d_j pi_i = delta_ij alpha g_i s_i / H + alpha w_i A_ij g_j / H
///              - 2 alpha w_i s_i g_j s_j / H^2.
/// Relative-boundary points are accepted only when they are equilibria; there
/// the formula reduces to the exact e_i - v -> -(e_i - v) structure.
inline Matrix jacobian(const ModelParameters& p, const SimplexPoint& v) {
  const int n = p.size();
  detail::require_size(p, v.size());
  if ((v.coords().array() == 0.0).any()) {
    const Vector f = vector_field(p, v);
    if (f.lpNorm<Eigen::Infinity>() >= 1e-10) {
      throw Error(ErrorKind::BoundaryJacobian,
                  "DF is only exposed on the relative boundary at equilibria");
    }
  }
  const auto t = detail::mean_field_terms(p, v.coords());
  const double a = p.alpha;
  Matrix j(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      double d = a * t.w(r) * p.matrix(r, c) * t.g(c) / t.h -
                 2.0 * a * t.w(r) * t.s(r) * t.g(c) * t.s(c) / (t.h * t.h);
      if (r == c) d += a * t.g(r) * t.s(r) / t.h - 1.0;
      j(r, c) = d;
    }
  }
  return j;
}

struct FlowTrajectory {
  std::vector<double> times;
  std::vector<SimplexPoint> states;
  std::vector<double> lyapunov_values;
};

namespace detail {

/// Projects the coordinates in `support` onto their own simplex and zeroes
/// the rest, so faces are preserved exactly.
inline SimplexPoint project_on_face(const Vector& x, const std::vector<int>& support) {
  Vector sub(static_cast<Eigen::Index>(support.size()));
  for (std::size_t k = 0; k < support.size(); ++k) sub(static_cast<Eigen::Index>(k)) = x(support[k]);
  const SimplexPoint projected = project_to_simplex(sub);
  Vector out = Vector::Zero(x.size());
  for (std::size_t k = 0; k < support.size(); ++k) out(support[k]) = projected[static_cast<int>(k)];
  return SimplexPoint(std::move(out));
}

}  // namespace detail

/// Classic fourth-order Runge-Kutta with re-projection after every step.
inline FlowTrajectory integrate_flow(const ModelParameters& p, const SimplexPoint& v0,
                                     double t_end, double dt = 0.01) {
  detail::require_size(p, v0.size());
  if (!(dt > 0.0) || !(dt <= t_end) || !std::isfinite(t_end)) {
    throw Error(ErrorKind::Domain, "need 0 < dt <= t_end");
  }
  const std::vector<int> support = v0.support();
  const auto steps = static_cast<long>(std::ceil(t_end / dt - 1e-9));

  FlowTrajectory traj;
  traj.times.reserve(static_cast<std::size_t>(steps) + 1);
  traj.states.reserve(static_cast<std::size_t>(steps) + 1);
  traj.times.push_back(0.0);
  traj.states.push_back(v0);
  traj.lyapunov_values.push_back(lyapunov(p, v0));

  Vector v = v0.coords();
  double t = 0.0;
  for (long s = 0; s < steps; ++s) {
    const double t_next = (s + 1 == steps) ? t_end : static_cast<double>(s + 1) * dt;
    const double h = t_next - t;
    const Vector k1 = vector_field(p, v);
    const Vector k2 = vector_field(p, Vector(v + 0.5 * h * k1));
    const Vector k3 = vector_field(p, Vector(v + 0.5 * h * k2));
    const Vector k4 = vector_field(p, Vector(v + h * k3));
    const Vector next = v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!next.allFinite()) {
      throw Error(ErrorKind::IntegratorBlowup, "non-finite state at t = " + std::to_string(t_next));
    }
    SimplexPoint state = detail::project_on_face(next, support);
    v = state.coords();
    t = t_next;
    traj.times.push_back(t);
    traj.lyapunov_values.push_back(lyapunov(p, state));
    traj.states.push_back(std::move(state));
  }
  return traj;
}

/// Q(v) with (I - K) Q = Q (I - K) = I - 1 pi^T, made unique by pi^T Q = 0.
/// Computed as (I - K + 1 pi^T)^{-1} - 1 pi^T.
inline Matrix fundamental_matrix(const ModelParameters& p, const SimplexPoint& v) {
  const int n = p.size();
  const Matrix k = transition_kernel(p, 0.0, v).entries();
  const Vector pi = invariant_measure(p, v).coords();
  const Matrix stationary = Vector::Ones(n) * pi.transpose();
  const Matrix system = Matrix::Identity(n, n) - k + stationary;
  Eigen::FullPivLU<Matrix> lu(system);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) {
    throw Error(ErrorKind::Reducibility, "K(v) is reducible; the fundamental matrix is undefined");
  }
  return lu.inverse() - stationary;
}

/// Occupation vector whose zero-offset kernel equals K(1/(n+1), v_n):
/// (v + eps) / (1 + N eps).
inline SimplexPoint shifted_occupation(const SimplexPoint& v, double eps) {
  const double n = static_cast<double>(v.size());
  Vector out = (v.coords().array() + eps) / (1.0 + n * eps);
  return SimplexPoint(std::move(out));
}

}  // namespace vrrw
