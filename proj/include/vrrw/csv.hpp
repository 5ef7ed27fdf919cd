#pragma once

// Plain-text writers. Floating-point values use the shortest form that
// parses back to the same double.

#include <charconv>
#include <ostream>
#include <string>

#include "vrrw/dynamics.hpp"
#include "vrrw/walk.hpp"

namespace vrrw {

inline std::string format_double(double x) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

/// Columns t, v_1..v_N, H.
inline void write_flow_csv(std::ostream& os, const FlowTrajectory& traj) {
  const int n = traj.states.empty() ? 0 : traj.states.front().size();
  os << 't';
  for (int i = 1; i <= n; ++i) os << ",v_" << i;
  os << ",H\n";
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    os << format_double(traj.times[k]);
    for (int i = 0; i < n; ++i) os << ',' << format_double(traj.states[k][i]);
    os << ',' << format_double(traj.lyapunov_values[k]) << '\n';
  }
}

/// Columns step, site (1-based).
inline void write_sites_csv(std::ostream& os, const TrajectoryRecord& rec) {
  if (!rec.has_full_log()) throw Error(ErrorKind::InsufficientData, "record has no full site log");
  os << "step,site\n";
  for (std::size_t n = 0; n < rec.sites.size(); ++n) os << n << ',' << rec.sites[n] + 1 << '\n';
}

/// Columns n, v_1..v_N.
inline void write_checkpoints_csv(std::ostream& os, const TrajectoryRecord& rec) {
  os << 'n';
  for (int i = 1; i <= rec.sites_count; ++i) os << ",v_" << i;
  os << '\n';
  for (const auto& cp : rec.checkpoints) {
    const SimplexPoint v = cp.occupation();
    os << cp.n;
    for (int i = 0; i < rec.sites_count; ++i) os << ',' << format_double(v[i]);
    os << '\n';
  }
}

}  // namespace vrrw
