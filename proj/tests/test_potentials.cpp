#include <cmath>

#include <gtest/gtest.h>

#include "dtower/potentials.hpp"

using namespace dtower;

TEST(Potentials, BrezisNirenbergAtOrigin) {
  const BrezisNirenbergPotential V(-10.0, 5);
  EXPECT_DOUBLE_EQ(V.value(0.0), 25.0);
  EXPECT_DOUBLE_EQ(V.upper_bound(), 25.0);
  EXPECT_NEAR(V.value(1.0), 25.0 / 4.0, 1e-15);
  EXPECT_THROW(BrezisNirenbergPotential(-3.0, 5), domain_error);
  EXPECT_THROW(BrezisNirenbergPotential(-10.0, 4), domain_error);
}

TEST(Potentials, BumpPeak) {
  const BumpPotential V(0.0, 1.0, 1.0, 0.5);
  EXPECT_DOUBLE_EQ(V.value(1.0), 1.0);
  EXPECT_DOUBLE_EQ(V.derivative(1.0), 0.0);
  EXPECT_THROW(BumpPotential(-1.0, 1.0, 1.0, 0.5), domain_error);
  EXPECT_THROW(BumpPotential(0.0, 0.0, 1.0, 0.5), domain_error);
  EXPECT_THROW(BumpPotential(1.0, -1.0, 1.0, 0.5), domain_error);
  EXPECT_THROW(BumpPotential(0.0, 1.0, 1.0, 0.0), domain_error);
  EXPECT_NO_THROW(BumpPotential(2.0, -1.0, 1.0, 0.5));
}

TEST(Potentials, DerivativesMatchCentralDifferences) {
  const std::vector<PotentialPtr> Vs = {
      std::make_shared<BrezisNirenbergPotential>(-12.0, 6), std::make_shared<BumpPotential>(0.3, 1.4, 0.8, 0.4),
      std::make_shared<BumpPotential>(2.0, -0.9, 1.1, 0.2),
      std::make_shared<TablePotential>(std::vector<double>{0, 0.5, 1, 1.5, 2, 3},
                                       std::vector<double>{1, 1.5, 2, 1.5, 1, 0.5})};
  for (const auto& V : Vs)
    for (double s : {0.13, 0.7, 1.05, 1.77, 2.6}) {
      const double h = 1e-6;
      const double fd = (V->value(s + h) - V->value(s - h)) / (2 * h);
      EXPECT_NEAR(V->derivative(s), fd, 1e-6 * (1 + std::abs(fd))) << V->family() << " at " << s;
    }
}

TEST(Potentials, TableInterpolatesAndClamps) {
  const TablePotential V({0, 0.5, 1, 1.5, 2, 3}, {1, 1.5, 2, 1.5, 1, 0.5});
  EXPECT_DOUBLE_EQ(V.value(1.0), 2.0);
  EXPECT_DOUBLE_EQ(V.value(-1.0), 1.0);
  EXPECT_DOUBLE_EQ(V.value(10.0), 0.5);
  EXPECT_DOUBLE_EQ(V.upper_bound(), 2.0);
  for (double s = 0; s <= 3; s += 0.01) EXPECT_LE(V.value(s), V.upper_bound() + 1e-15);
  EXPECT_EQ(V.declared_range().lo, 0.0);
  EXPECT_EQ(V.declared_range().hi, 3.0);
  EXPECT_THROW(TablePotential({0, 1, 2}, {1, 1, 1}), domain_error);
  EXPECT_THROW(TablePotential({0, 1, 1, 2}, {1, 1, 1, 1}), domain_error);
  EXPECT_THROW(TablePotential({0, 1, 2, 3}, {1, -1, 1, 1}), domain_error);
}

TEST(Potentials, FactoryFamiliesAndErrors) {
  EXPECT_EQ(make_potential({"bn", {{"lambda", -10}, {"N", 5}}, {}, {}})->value(0), 25.0);
  EXPECT_EQ(make_potential({"const", {{"value", 2.5}}, {}, {}})->value(7), 2.5);
  EXPECT_EQ(make_potential({"bump", {{"b", 1}, {"c", 1}, {"w", 0.5}}, {}, {}})->value(1), 1.0);
  EXPECT_THROW(make_potential({"bump", {{"b", 1}, {"c", 1}}, {}, {}}), domain_error);
  EXPECT_THROW(make_potential({"bump", {{"b", 1}, {"c", 1}, {"w", 0.5}, {"q", 1}}, {}, {}}), domain_error);
  EXPECT_THROW(make_potential({"gauss", {}, {}, {}}), domain_error);
}

TEST(Potentials, UnitBumpsHaveCriticalPointAtOne) {
  const auto vmax = unit_max_bump();
  const auto vmin = unit_min_bump();
  EXPECT_NEAR(vmax->value(1.0), 1.0, 1e-15);
  EXPECT_NEAR(vmin->value(1.0), 1.0, 1e-15);
  EXPECT_NEAR(r2v_slope(*vmax, 1.0), 0.0, 1e-14);
  EXPECT_NEAR(r2v_slope(*vmin, 1.0), 0.0, 1e-14);
  const auto pmax = r2v_critical(*vmax, 0.5, 1.5, 1e-12);
  ASSERT_EQ(pmax.size(), 1u);
  EXPECT_EQ(pmax[0].kind, CriticalKind::max);
  EXPECT_NEAR(pmax[0].r0, 1.0, 1e-10);
  // the dip also leaves a local maximum of s^2 V just inside it
  std::vector<PotentialCriticalPoint> minima;
  for (const auto& p : r2v_critical(*vmin, 0.5, 1.5, 1e-12))
    if (p.kind == CriticalKind::min) minima.push_back(p);
  ASSERT_EQ(minima.size(), 1u);
  EXPECT_EQ(minima[0].curvature_sign, 1);
  EXPECT_NEAR(minima[0].r0, 1.0, 1e-10);
}

// Oracle: plain bisection on the analytic slope 2 s V + s^2 V'.
TEST(Potentials, BumpMaximumNearOne) {
  const BumpPotential V(0.05, 1.0, 1.0, 0.3);
  auto slope = [&](double s) { return 2 * s * V.value(s) + s * s * V.derivative(s); };
  double a = 0.9, b = 1.2;
  ASSERT_GT(slope(a), 0);
  ASSERT_LT(slope(b), 0);
  for (int i = 0; i < 200; ++i) (slope(0.5 * (a + b)) > 0 ? a : b) = 0.5 * (a + b);
  const auto pts = r2v_critical(V, 0.5, 1.6, 1e-13);
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_EQ(pts[0].kind, CriticalKind::max);
  EXPECT_NEAR(pts[0].r0, 0.5 * (a + b), 1e-11);
  EXPECT_GT(pts[0].r0, 0.9);
  EXPECT_LT(pts[0].r0, 1.2);
}

TEST(Potentials, ConstantHasNoCriticalRadius) {
  EXPECT_TRUE(r2v_critical(ConstantPotential(1.0), 0.0, 50.0, 1e-12).empty());
}

TEST(Potentials, BracketValidation) {
  const auto V = unit_max_bump();
  EXPECT_THROW(r2v_critical(*V, 1.0, 0.5, 1e-12), domain_error);
  EXPECT_THROW(r2v_critical(*V, 0.5, 1.5, 0.0), domain_error);
  const TablePotential T({0.5, 1, 1.5, 2}, {1, 2, 1, 0.5});
  EXPECT_THROW(r2v_critical(T, 0.0, 1.5, 1e-12), domain_error);
}
