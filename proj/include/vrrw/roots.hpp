#pragma once

// Derivative-free bracketing of all sign changes of a scalar function on a
// logarithmic grid, refined by bisection.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "vrrw/error.hpp"

namespace vrrw {

struct RootScanOptions {
  double lo = 1e-6;
  double hi = 1e6;
  std::size_t grid_points = 100000;
  double relative_width = 1e-14;
  int max_bisections = 200;
};

/// Refines a bracket [a, b] with f(a), f(b) of opposite sign.
template <class F>
double bisect(F&& f, double a, double b, double fa, const RootScanOptions& opt = {}) {
  for (int iter = 0; iter < opt.max_bisections; ++iter) {
    const double m = 0.5 * (a + b);
    if (b - a <= opt.relative_width * std::max(1.0, std::abs(m)) || m <= a || m >= b) return m;
    const double fm = f(m);
    if (fm == 0.0) return m;
    if ((fm < 0.0) == (fa < 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  throw Error(ErrorKind::Convergence, "bisection did not converge within " +
                                          std::to_string(opt.max_bisections) + " steps");
}

/// All roots of f on [lo, hi] visible as sign changes (or exact zeros) on a
/// geometric grid. Grid points where f is not finite are skipped.
template <class F>
std::vector<double> scan_roots_log_grid(F&& f, const RootScanOptions& opt = {}) {
  std::vector<double> roots;
  const double log_lo = std::log(opt.lo);
  const double step = (std::log(opt.hi) - log_lo) / static_cast<double>(opt.grid_points - 1);
  bool have_prev = false;
  double t_prev = 0.0;
  double f_prev = 0.0;
  for (std::size_t i = 0; i < opt.grid_points; ++i) {
    const double t = std::exp(log_lo + step * static_cast<double>(i));
    const double ft = f(t);
    if (!std::isfinite(ft)) {
      have_prev = false;
      continue;
    }
    if (ft == 0.0) {
      roots.push_back(t);
      have_prev = false;
      continue;
    }
    if (have_prev && (ft < 0.0) != (f_prev < 0.0)) {
      roots.push_back(bisect(f, t_prev, t, f_prev, opt));
    }
    have_prev = true;
    t_prev = t;
    f_prev = ft;
  }
  return roots;
}

}  // namespace vrrw
