#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vrrw {

enum class ErrorKind {
  InvalidSize,
  Symmetry,
  Positivity,
  RowSum,
  Numeric,
  DegenerateKernel,
  DegenerateSupport,
  BoundaryJacobian,
  IntegratorBlowup,
  Reducibility,
  InvalidFace,
  Domain,
  Pole,
  Convergence,
  Budget,
  SiteRange,
  Summability,
  InsufficientData,
  Config,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidSize: return "invalid-size";
    case ErrorKind::Symmetry: return "symmetry";
    case ErrorKind::Positivity: return "positivity";
    case ErrorKind::RowSum: return "row-sum";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::DegenerateKernel: return "degenerate-kernel";
    case ErrorKind::DegenerateSupport: return "degenerate-support";
    case ErrorKind::BoundaryJacobian: return "boundary-jacobian";
    case ErrorKind::IntegratorBlowup: return "integrator-blowup";
    case ErrorKind::Reducibility: return "reducibility";
    case ErrorKind::InvalidFace: return "invalid-face";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Pole: return "pole";
    case ErrorKind::Convergence: return "convergence";
    case ErrorKind::Budget: return "budget";
    case ErrorKind::SiteRange: return "site-range";
    case ErrorKind::Summability: return "summability";
    case ErrorKind::InsufficientData: return "insufficient-data";
    case ErrorKind::Config: return "config";
  }
  return "unknown";
}

/// Every failure raised by the library. `kind()` lets callers (and tests)
/// distinguish error classes without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what),
        kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace vrrw
