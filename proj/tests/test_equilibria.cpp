#include <gtest/gtest.h>

#include <cmath>

#include "vrrw/equilibria.hpp"

using namespace vrrw;

namespace {

const double kGolden = (1.0 + std::sqrt(5.0)) / 2.0;

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no vrrw::Error thrown";
  return ErrorKind::Config;
}

bool contains_near(const std::vector<double>& xs, double x, double tol) {
  for (double y : xs)
    if (std::abs(x - y) <= tol) return true;
  return false;
}

}  // namespace

TEST(Thresholds, ClosedForms) {
  EXPECT_EQ(critical_alpha(3), 2.0);
  EXPECT_EQ(critical_alpha(5), 4.0 / 3.0);
  EXPECT_EQ(critical_alpha_loop(3, 0.5), 1.25);
  EXPECT_EQ(critical_alpha_loop(2, 0.5), 1.5);
  EXPECT_EQ(kind_of([] { critical_alpha(2); }), ErrorKind::Domain);
  EXPECT_EQ(kind_of([] { critical_alpha_loop(2, 0.0); }), ErrorKind::Pole);
  EXPECT_EQ(kind_of([] { critical_alpha_loop(3, 1.0); }), ErrorKind::Domain);
  const auto table = threshold_table(0.0, 6);
  ASSERT_EQ(table.size(), 4u);  // k = 2 is the pole
  EXPECT_EQ(table.front().k, 3);
}

TEST(Thresholds, CenterEigenvalueChangesSignAtCriticalAlpha) {
  EXPECT_NEAR(center_eigenvalue(4, 1.2), -0.2, 1e-15);
  for (int k = 3; k <= 9; ++k) {
    EXPECT_NEAR(center_eigenvalue(k, critical_alpha(k)), 0.0, 1e-14);
    for (double c : {0.0, 0.25, 0.5}) {
      EXPECT_NEAR(center_eigenvalue(k, critical_alpha_loop(k, c), c), 0.0, 1e-14);
    }
  }
}

TEST(Phi, HandValues) {
  // N = 3, k = 1, alpha = 3: phi = -t^5 + 2 t^3 - t^2.
  EXPECT_NEAR(phi(0.5, 3, 1, 3.0), -0.03125, 1e-16);
  EXPECT_NEAR(phi(1.0, 3, 1, 2.0), 0.0, 1e-15);
  EXPECT_EQ(kind_of([] { phi(-1.0, 3, 1, 2.0); }), ErrorKind::Domain);
}

TEST(Phi, DerivativeFactorisation) {
  for (double alpha : {1.3, 2.0, 3.7})
    for (double t : {0.2, 0.9, 1.7, 5.0}) {
      const double h = 1e-6 * t;
      const double fd = (phi(t + h, 5, 2, alpha) - phi(t - h, 5, 2, alpha)) / (2 * h);
      EXPECT_NEAR(phi_prime(t, 5, 2, alpha), fd, 1e-6 * (1 + std::abs(fd)));
      EXPECT_NEAR(phi_prime(t, 5, 2, alpha), std::pow(t, alpha - 2) * psi(t, 5, 2, alpha), 1e-12);
    }
}

TEST(TwoLevel, GoldenRatioRoots) {
  const auto low = two_level_ratios(3, 1, 1.5);
  ASSERT_EQ(low.size(), 1u);
  EXPECT_NEAR(low[0], kGolden * kGolden, 1e-12);
  const auto high = two_level_ratios(3, 1, 3.0);
  ASSERT_EQ(high.size(), 1u);
  EXPECT_NEAR(high[0], kGolden - 1.0, 1e-12);
  for (const auto& e : solve_two_level(3, 1, 1.5)) {
    EXPECT_NEAR(e.point.coords().sum(), 1.0, 1e-15);
  }
}

TEST(TwoLevel, CoordinatesSolveTheField) {
  for (int n = 3; n <= 6; ++n)
    for (int k = 1; 2 * k <= n; ++k)
      for (double alpha : {1.2, 1.6, 2.5}) {
        const auto p = ModelParameters::complete(n, alpha);
        for (double t : two_level_ratios(n, k, alpha)) {
          const SimplexPoint v(two_level_coords(n, k, t));
          EXPECT_LT(vector_field(p, v).lpNorm<Eigen::Infinity>(), 1e-10) << n << ' ' << k << ' ' << alpha;
        }
      }
}

TEST(Enumerate, ThreeSitesBelowThreshold) {
  const auto p = ModelParameters::complete(3, 1.5);
  const auto eqs = classify_all(p, enumerate_all(3, 1.5));
  ASSERT_EQ(eqs.size(), 7u);  // three edges, center, three two-level points
  int stable = 0;
  for (const auto& e : eqs) {
    EXPECT_TRUE(e.verdict.has_value());
    if (e.verdict == Verdict::Stable) ++stable;
    if (e.kind == EquilibriumKind::TwoLevel) {
      EXPECT_EQ(e.verdict, Verdict::Unstable);
      // Two equal coordinates and the analytic level eigenvalue in the spectrum.
      const auto& d = *e.two_level;
      EXPECT_TRUE(contains_near(e.tangent_eigenvalues, level_eigenvalue(p, e.point, d.u2), 1e-8));
    }
  }
  EXPECT_EQ(stable, 4);
}

TEST(Enumerate, CenterVerdictFlipsAcrossThreshold) {
  for (int n = 3; n <= 6; ++n) {
    const double ac = critical_alpha(n);
    for (double alpha : {ac * 0.9, ac * 1.1}) {
      const auto p = ModelParameters::complete(n, alpha);
      const auto e = classify(p, Equilibrium{SimplexPoint::center(n), FaceIndex::full(n),
                                             EquilibriumKind::FaceCenter, std::nullopt, {}, {},
                                             std::nullopt, false});
      EXPECT_EQ(e.verdict, alpha < ac ? Verdict::Stable : Verdict::Unstable);
      for (double l : e.tangent_eigenvalues) EXPECT_NEAR(l, center_eigenvalue(n, alpha), 1e-9);
    }
  }
}

TEST(Enumerate, CountsAndOrder) {
  const auto eqs = enumerate_all(5, 2.5);
  int centers = 0;
  for (const auto& e : eqs)
    if (e.kind == EquilibriumKind::FaceCenter) ++centers;
  EXPECT_EQ(centers, (1 << 5) - 5 - 1);
  for (std::size_t i = 1; i < eqs.size(); ++i) EXPECT_FALSE(report_order(eqs[i], eqs[i - 1]));
  EXPECT_EQ(kind_of([] { enumerate_all(13, 2.0); }), ErrorKind::Budget);
}

TEST(Enumerate, ThreadCountDoesNotChangeResults) {
  const auto p = ModelParameters::complete(5, 1.4);
  const auto one = classify_all(p, enumerate_all(5, 1.4), 1);
  const auto four = classify_all(p, enumerate_all(5, 1.4), 4);
  ASSERT_EQ(one.size(), four.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    EXPECT_EQ(one[i].point, four[i].point);
    EXPECT_EQ(one[i].tangent_eigenvalues, four[i].tangent_eigenvalues);
    EXPECT_EQ(one[i].verdict, four[i].verdict);
  }
}

TEST(Enumerate, ClassifyRejectsNonEquilibria) {
  const auto p = ModelParameters::complete(3, 2.0);
  Vector x(3);
  x << 0.5, 0.3, 0.2;
  const SimplexPoint v(x);
  EXPECT_THROW(classify(p, Equilibrium{v, FaceIndex::full(3), EquilibriumKind::FaceCenter, std::nullopt,
                                       {}, {}, std::nullopt, false}),
               Error);
}

TEST(Enumerate, LoopModelIncludesVertices) {
  // With loops every vertex is an equilibrium and the 2-face threshold is finite.
  const double c = 0.5;
  const auto eqs = enumerate_all(3, 2.0, c);
  int vertices = 0;
  for (const auto& e : eqs)
    if (e.support.size() == 1) ++vertices;
  EXPECT_EQ(vertices, 3);
  const auto p = ModelParameters::loop_model(3, 2.0, c);
  for (const auto& e : classify_all(p, eqs))
    EXPECT_LT(vector_field(p, e.point).lpNorm<Eigen::Infinity>(), 1e-10);
}
