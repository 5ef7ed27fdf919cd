#pragma once

// Interaction matrices, simplex points, faces and the Euclidean projection
// onto the probability simplex.
//
// Sites are 0-based everywhere inside the library; the CLI and all file
// formats use 1-based labels.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vrrw/error.hpp"

namespace vrrw {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

namespace tolerance {
inline constexpr double kRowSum = 1e-12;
inline constexpr double kSimplexSum = 1e-12;
inline constexpr double kReducedCap = 0.75;
}  // namespace tolerance

/// Symmetric nonnegative matrix with positive off-diagonal entries and a
/// common row sum. Only obtainable through `validate` or the named builders,
/// so every instance satisfies the invariants.
class InteractionMatrix {
 public:
  [[nodiscard]] int size() const noexcept { return static_cast<int>(entries_.rows()); }
  [[nodiscard]] double operator()(int i, int j) const { return entries_(i, j); }
  [[nodiscard]] const Matrix& entries() const noexcept { return entries_; }
  [[nodiscard]] double row_sum() const noexcept { return row_sum_; }

  [[nodiscard]] bool has_loop(int i) const { return entries_(i, i) > 0.0; }

  friend bool operator==(const InteractionMatrix& a, const InteractionMatrix& b) {
    return a.row_sum_ == b.row_sum_ && a.entries_ == b.entries_;
  }

  static InteractionMatrix validate(const Matrix& raw);

 private:
  InteractionMatrix(Matrix entries, double row_sum)
      : entries_(std::move(entries)), row_sum_(row_sum) {}

  Matrix entries_;
  double row_sum_;
};

inline InteractionMatrix InteractionMatrix::validate(const Matrix& raw) {
  const auto n = raw.rows();
  if (n < 2 || raw.cols() != n) {
    throw Error(ErrorKind::InvalidSize,
                "interaction matrix must be square with N >= 2, got " +
                    std::to_string(raw.rows()) + "x" + std::to_string(raw.cols()));
  }
  if (!raw.allFinite()) {
    throw Error(ErrorKind::Numeric, "interaction matrix has non-finite entries");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (raw(i, j) != raw(j, i)) {
        throw Error(ErrorKind::Symmetry, "A[" + std::to_string(i + 1) + "][" +
                                             std::to_string(j + 1) + "] != A[" +
                                             std::to_string(j + 1) + "][" +
                                             std::to_string(i + 1) + "]");
      }
      if (raw(i, j) < 0.0) {
        throw Error(ErrorKind::Positivity, "negative entry in interaction matrix");
      }
      if (i != j && raw(i, j) <= 0.0) {
        throw Error(ErrorKind::Positivity, "off-diagonal entry A[" + std::to_string(i + 1) +
                                               "][" + std::to_string(j + 1) +
                                               "] must be positive");
      }
    }
  }
  const Vector sums = raw.rowwise().sum();
  const double reference = sums(0);
  for (Eigen::Index i = 1; i < n; ++i) {
    if (std::abs(sums(i) - reference) > tolerance::kRowSum * std::abs(reference)) {
      throw Error(ErrorKind::RowSum, "row sums differ: row 1 sums to " +
                                         std::to_string(reference) + ", row " +
                                         std::to_string(i + 1) + " to " +
                                         std::to_string(sums(i)));
    }
  }
  return InteractionMatrix(raw, reference);
}

/// Hollow all-ones matrix: the VRRW on the loop-free complete graph.
inline InteractionMatrix complete_graph(int n) {
  if (n < 2) {
    throw Error(ErrorKind::InvalidSize, "complete graph needs N >= 2, got " + std::to_string(n));
  }
  Matrix a = Matrix::Ones(n, n);
  a.diagonal().setZero();
  return InteractionMatrix::validate(a);
}

/// Complete graph whose diagonal is `c`: the interpolating loop model,
/// c = 0 is the loop-free walk, c = 1 the complete graph with loops.
inline InteractionMatrix loop_complete_graph(int n, double c) {
  if (!(c >= 0.0) || !std::isfinite(c)) {
    throw Error(ErrorKind::Domain, "loop weight c must be finite and >= 0");
  }
  if (n < 2) {
    throw Error(ErrorKind::InvalidSize, "complete graph needs N >= 2, got " + std::to_string(n));
  }
  Matrix a = Matrix::Ones(n, n);
  a.diagonal().setConstant(c);
  return InteractionMatrix::validate(a);
}

/// Probability vector. The constructor enforces nonnegativity and unit mass.
class SimplexPoint {
 public:
  explicit SimplexPoint(Vector coords) : coords_(std::move(coords)) {
    if (coords_.size() < 1 || !coords_.allFinite()) {
      throw Error(ErrorKind::Numeric, "simplex point must be finite and nonempty");
    }
    if ((coords_.array() < 0.0).any()) {
      throw Error(ErrorKind::Domain, "simplex point has a negative coordinate");
    }
    if (std::abs(coords_.sum() - 1.0) > tolerance::kSimplexSum) {
      throw Error(ErrorKind::Domain, "simplex point coordinates sum to " +
                                         std::to_string(coords_.sum()));
    }
  }

  static SimplexPoint center(int n) { return SimplexPoint(Vector::Constant(n, 1.0 / n)); }
  static SimplexPoint vertex(int n, int i) {
    Vector v = Vector::Zero(n);
    v(i) = 1.0;
    return SimplexPoint(std::move(v));
  }

  [[nodiscard]] int size() const noexcept { return static_cast<int>(coords_.size()); }
  [[nodiscard]] double operator[](int i) const { return coords_(i); }
  [[nodiscard]] const Vector& coords() const noexcept { return coords_; }

  [[nodiscard]] std::vector<int> support() const {
    std::vector<int> s;
    for (int i = 0; i < size(); ++i) {
      if (coords_(i) != 0.0) s.push_back(i);
    }
    return s;
  }

  /// Sites of a loop-free row whose coordinate exceeds the 3/4 cap of the
  /// reduced simplex. Empty for every walk-derived point with n >= 1.
  [[nodiscard]] std::vector<int> reduced_cap_violations(const InteractionMatrix& a) const {
    std::vector<int> bad;
    for (int i = 0; i < size(); ++i) {
      if (!a.has_loop(i) && coords_(i) > tolerance::kReducedCap) bad.push_back(i);
    }
    return bad;
  }

  friend bool operator==(const SimplexPoint& a, const SimplexPoint& b) {
    return a.coords_ == b.coords_;
  }

 private:
  Vector coords_;
};

/// Nonempty set of distinct sites, stored sorted.
class FaceIndex {
 public:
  FaceIndex(std::vector<int> sites, int n) : sites_(std::move(sites)) {
    if (sites_.empty()) throw Error(ErrorKind::InvalidFace, "face support is empty");
    std::sort(sites_.begin(), sites_.end());
    if (std::adjacent_find(sites_.begin(), sites_.end()) != sites_.end()) {
      throw Error(ErrorKind::InvalidFace, "face support has repeated sites");
    }
    if (sites_.front() < 0 || sites_.back() >= n) {
      throw Error(ErrorKind::InvalidFace, "face support out of range for N = " + std::to_string(n));
    }
  }

  /// From 1-based labels.
  static FaceIndex from_labels(std::span<const int> labels, int n) {
    std::vector<int> s(labels.begin(), labels.end());
    for (int& x : s) --x;
    return FaceIndex(std::move(s), n);
  }

  static FaceIndex full(int n) {
    std::vector<int> s(static_cast<std::size_t>(n));
    std::iota(s.begin(), s.end(), 0);
    return FaceIndex(std::move(s), n);
  }

  [[nodiscard]] int size() const noexcept { return static_cast<int>(sites_.size()); }
  [[nodiscard]] const std::vector<int>& sites() const noexcept { return sites_; }
  [[nodiscard]] bool contains(int i) const {
    return std::binary_search(sites_.begin(), sites_.end(), i);
  }
  [[nodiscard]] std::vector<int> labels() const {
    std::vector<int> out = sites_;
    for (int& x : out) ++x;
    return out;
  }

  friend bool operator==(const FaceIndex&, const FaceIndex&) = default;
  friend auto operator<=>(const FaceIndex& a, const FaceIndex& b) {
    if (a.size() != b.size()) return a.size() <=> b.size();
    return a.sites_ <=> b.sites_;
  }

 private:
  std::vector<int> sites_;
};

/// Euclidean projection onto the standard probability simplex (sort and
/// threshold). Points already on the simplex are returned bit-for-bit, which
/// makes the projection exactly idempotent.
inline SimplexPoint project_to_simplex(const Vector& x) {
  if (x.size() < 1 || !x.allFinite()) {
    throw Error(ErrorKind::Numeric, "projection input must be finite and nonempty");
  }
  const auto n = x.size();
  const double slack = 64.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(n);
  if ((x.array() >= 0.0).all() && std::abs(x.sum() - 1.0) <= slack) return SimplexPoint(x);

  std::vector<double> sorted(x.data(), x.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double running = 0.0;
  double tau = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    running += sorted[static_cast<std::size_t>(k)];
    const double candidate = (running - 1.0) / static_cast<double>(k + 1);
    if (sorted[static_cast<std::size_t>(k)] - candidate > 0.0) tau = candidate;
  }
  Vector y = (x.array() - tau).max(0.0).matrix();
  // Renormalise the last few ulps so the result passes the unit-mass check
  // and is itself a fixed point of the fast path above.
  y /= y.sum();
  return SimplexPoint(std::move(y));
}

}  // namespace vrrw
