#include <cmath>
#include <random>
#include <string>

#include <boost/math/differentiation/finite_difference.hpp>
#include <gtest/gtest.h>

#include "dtower/optimizer.hpp"
#include "dtower/reduced_energy.hpp"

using namespace dtower;

namespace {

namespace fd = boost::math::differentiation;

// The two leading-order balances, each in its own scaled variable: the potential against the
// same-ring sum fixes the concentration m, the cross-ring sum against the O(h^2) part of the
// same-ring sum fixes the height x. Nothing from ScaledObjective is used.
double concentration_gain(int N, double V, double m) {
  const ReductionConstants& c = eval_constants(N);
  return c.A2 * V / (m * m) - c.B0 * c.B1 / std::pow(m, N - 2);
}

double height_cost(int N, double x) {
  const ReductionConstants& c = eval_constants(N);
  return 0.5 * (N - 2) * c.B1 * x * x + c.B2 / std::pow(x, N - 3);
}

}  // namespace

TEST(ReducedEnergy, ConstantTermIsBubbleEnergyPerCenter) {
  const auto V = unit_max_bump();
  for (int N : {5, 6, 8})
    for (int k : {2, 17, 400}) {
      const auto v = F_main(N, k, 1.0, 0.1, 50.0, *V);
      EXPECT_EQ(v.terms.constant, k * eval_constants(N).A1);
      EXPECT_NEAR(v.F, v.terms.constant + v.terms.non_constant(), 1e-12 * std::abs(v.F));
      EXPECT_LT(v.terms.same_ring, 0.0);
      EXPECT_LT(v.terms.cross_ring, 0.0);
      EXPECT_GT(v.terms.potential, 0.0);
    }
}

TEST(ReducedEnergy, TermsScaleWithMuAsPowerLaws) {
  const auto V = unit_max_bump();
  for (int N : {5, 6, 7}) {
    const auto a = F_main(N, 40, 1.0, 0.05, 30.0, *V);
    const auto b = F_main(N, 40, 1.0, 0.05, 60.0, *V);
    EXPECT_NEAR(a.terms.potential / b.terms.potential, 4.0, 1e-12);
    EXPECT_NEAR(a.terms.same_ring / b.terms.same_ring, std::pow(2.0, N - 2), 1e-11);
    EXPECT_NEAR(a.terms.cross_ring / b.terms.cross_ring, std::pow(2.0, N - 2), 1e-11);
  }
}

TEST(ReducedEnergy, SemiWithLeadingLawsEqualsMain) {
  const auto V = unit_max_bump();
  for (const Configuration& cfg : {Configuration{5, 64, 1.0, 0.05, 400.0}, Configuration{6, 30, 0.8, 0.1, 90.0},
                                   Configuration{7, 12, 1.2, 0.2, 20.0}}) {
    const auto semi = F_semi(cfg, *V, true);
    const auto main = F_main(cfg.N, cfg.k, cfg.r, cfg.h, cfg.mu, *V);
    EXPECT_NEAR(semi.terms.same_ring, main.terms.same_ring, 1e-10 * std::abs(main.terms.same_ring));
    EXPECT_NEAR(semi.terms.cross_ring, main.terms.cross_ring, 1e-10 * std::abs(main.terms.cross_ring));
    EXPECT_NEAR(semi.F, main.F, 1e-12 * std::abs(main.F));
    EXPECT_EQ(semi.remainder_budget, main.remainder_budget);
  }
}

TEST(ReducedEnergy, ExactSumsApproachLeadingLawsForLargeK) {
  const auto V = unit_max_bump();
  double prev = INFINITY;
  for (int k : {64, 256, 1024}) {
    const Configuration cfg{6, k, 1.0, 2.0 * std::pow(double(k), -0.6), 0.3 * std::pow(double(k), 2.0)};
    const auto exact = F_semi(cfg, *V);
    const auto law = F_semi(cfg, *V, true);
    const double rel = std::abs(exact.terms.non_constant() / law.terms.non_constant() - 1.0);
    EXPECT_LT(rel, prev) << "k = " << k;
    prev = rel;
  }
  EXPECT_LT(prev, 0.05);
}

TEST(ReducedEnergy, GradientMatchesFiniteDifferences) {
  const auto V = unit_max_bump();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit;
  for (int i = 0; i < 60; ++i) {
    const int N = 5 + i % 4;
    const int k = 8 + int(200 * unit(rng));
    const double r = 0.7 + 0.6 * unit(rng), h = 0.02 + 0.5 * unit(rng), mu = 5 + 200 * unit(rng);
    const auto g = grad_main(N, k, r, h, mu, *V);
    // relative steps: h can be small next to the absolute stencil width
    auto Fr = [&](double t) { return F_main(N, k, r * (1 + t), h, mu, *V).F; };
    auto Fh = [&](double t) { return F_main(N, k, r, h * (1 + t), mu, *V).F; };
    auto Fm = [&](double t) { return F_main(N, k, r, h, mu * (1 + t), *V).F; };
    const double nr = fd::finite_difference_derivative<decltype(Fr), double, 6>(Fr, 0.0) / r;
    const double nh = fd::finite_difference_derivative<decltype(Fh), double, 6>(Fh, 0.0) / h;
    const double nm = fd::finite_difference_derivative<decltype(Fm), double, 6>(Fm, 0.0) / mu;
    // the constant k A1 dominates F, so differences carry its rounding
    const double noise = 1e-6 * k * eval_constants(N).A1;
    EXPECT_NEAR(g.dF_dr, nr, 1e-6 * std::abs(nr) + noise / r);
    EXPECT_NEAR(g.dF_dh, nh, 1e-6 * std::abs(nh) + noise / h);
    EXPECT_NEAR(g.dF_dmu, nm, 1e-6 * std::abs(nm) + noise / mu);
  }
}

TEST(ReducedEnergy, Validation) {
  const auto V = unit_max_bump();
  EXPECT_THROW(F_main(4, 10, 1.0, 0.1, 10.0, *V), domain_error);
  EXPECT_THROW(F_main(5, 1, 1.0, 0.1, 10.0, *V), domain_error);
  EXPECT_THROW(F_main(5, 10, 1.0, 0.0, 10.0, *V), domain_error);
  EXPECT_THROW(F_main(5, 10, 1.0, 1.0, 10.0, *V), domain_error);
  EXPECT_THROW(F_main(5, 10, 1.0, 0.1, -1.0, *V), domain_error);
  EXPECT_THROW(F_main(5, 10, -1.0, 0.1, 10.0, *V), domain_error);
  EXPECT_THROW(F_main(5, 10, 1.0, 0.1, 10.0, ConstantPotential(0.0)), domain_error);
}

TEST(ScaledObjective, GradientAtTheScaledCenterFallsLikeHSquared) {
  // (r0, h0, mu0) is stationary up to the sqrt(1 - h^2) corrections: O(H0^2) in r and mu with a
  // settled constant, and of higher order in h, whose balance already includes them
  const auto V = unit_max_bump();
  for (int N : {5, 6, 7}) {
    std::array<double, 3> prev{};
    for (int k : {512, 4096, 32768}) {
      const ScaledObjective obj{N, k, V.get()};
      const CriticalScalars cs = critical_scalars(N, *V, 1.0, k);
      const auto g = obj.gradient({1.0, cs.h0, cs.mu0});
      for (std::size_t i = 0; i < 3; ++i) {
        const double c = std::abs(g[i]) / (cs.H0 * cs.H0);
        if (prev[i] > 0 && i == 1) EXPECT_LT(c, 0.2 * prev[i]) << "N = " << N << " k = " << k;
        if (prev[i] > 0 && i != 1) EXPECT_NEAR(c / prev[i], 1.0, 0.05) << "N = " << N << " k = " << k << " component " << i;
        prev[i] = c;
      }
    }
  }
}

TEST(ScaledObjective, LeadingOrderOptimumIsTheCriticalScalars) {
  for (int N : {5, 6, 7, 9}) {
    const ReductionConstants& c = eval_constants(N);
    const double Vr = 1.0;
    auto f = [&](const Vec<2>& w) { return height_cost(N, w[0]) - concentration_gain(N, Vr, w[1]); };
    auto g = [&](const Vec<2>& w) {
      const double x = w[0], m = w[1];
      return Vec<2>{(N - 2) * c.B1 * x - (N - 3) * c.B2 / std::pow(x, N - 2),
                    2 * c.A2 * Vr / (m * m * m) - (N - 2) * c.B0 * c.B1 / std::pow(m, N - 1)};
    };
    const double mu0 = c.mu0(1.0, Vr);
    const auto m = minimize_in_box<2>(f, g, {0.7 * c.h0, 1.3 * mu0}, {0.2 * c.h0, 0.2 * mu0}, {5 * c.h0, 5 * mu0}, 1e-8);
    EXPECT_TRUE(m.converged) << "N = " << N;
    EXPECT_NEAR(m.x[0], c.h0, 1e-6 * c.h0) << "N = " << N;
    EXPECT_NEAR(m.x[1], mu0, 1e-6 * mu0) << "N = " << N;
    // the optimal concentration gain is the normalizer constant
    EXPECT_NEAR(concentration_gain(N, Vr, m.x[1]), c.A3, 1e-9 * c.A3) << "N = " << N;
  }
}

TEST(Boxes, ShrinkingWidthAtN6FollowsItsExponent) {
  EXPECT_NEAR(shrinking_exponent(6), 0.6, 1e-15);
  const auto V = unit_max_bump();
  double prev = INFINITY;
  for (int k : {64, 128, 256, 1024}) {
    const ParameterBox box = make_boxes(6, k, 1.0, *V, WidthMode::shrinking);
    EXPECT_FALSE(box.exponent_anomaly);
    EXPECT_NEAR(box.width, std::pow(double(k), -0.6), 1e-15);
    EXPECT_TRUE(box.contains(box.center()));
    // centers coincide in scaled variables, so smaller widths nest
    EXPECT_LT(box.width, prev);
    prev = box.width;
    EXPECT_NEAR(box.h_lo() * std::pow(double(k), 0.6), box.lo[1], 1e-12);
    EXPECT_NEAR(box.mu_hi() * std::pow(double(k), -2.0), box.hi[2], 1e-12);
  }
}

TEST(Boxes, ShrinkingRequestAtN5FallsBackToFixedWidth) {
  EXPECT_LE(shrinking_exponent(5), 0.0);
  const auto V = unit_max_bump();
  const ParameterBox s = make_boxes(5, 128, 1.0, *V, WidthMode::shrinking);
  const ParameterBox f = make_boxes(5, 128, 1.0, *V, WidthMode::fixed);
  EXPECT_TRUE(s.exponent_anomaly);
  EXPECT_FALSE(f.exponent_anomaly);
  EXPECT_EQ(s.width, f.width);
  EXPECT_EQ(f.width, default_fixed_width(5, 1.0, *V));
  const ReductionConstants& c = eval_constants(5);
  EXPECT_NEAR(f.width, 0.5 * std::min({c.h0, c.mu0(1.0, 1.0), 1.0}), 1e-15);
}

TEST(Boxes, InfeasibleBoxesAreRejectedWithAReason) {
  const auto V = unit_max_bump();
  // k^{-0.6} is not small enough for k = 4
  try {
    make_boxes(6, 4, 1.0, *V, WidthMode::shrinking);
    FAIL() << "expected an infeasible box";
  } catch (const domain_error& e) {
    EXPECT_EQ(std::string(e.what()).rfind("infeasible box", 0), 0u) << e.what();
  }
  EXPECT_THROW(make_boxes(5, 64, 1.0, *V, WidthMode::fixed, 10.0), domain_error);
  EXPECT_THROW(make_boxes(5, 1, 1.0, *V, WidthMode::fixed), domain_error);
  EXPECT_THROW(make_boxes(5, 64, 0.0, *V, WidthMode::fixed), domain_error);
}

TEST(SolveCritical, MaximumOfTheBumpIsInteriorAndConverges) {
  const auto V = unit_max_bump();
  double prev_h = INFINITY, prev_mu = INFINITY;
  for (int k : {64, 128, 256, 512}) {
    const ParameterBox box = make_boxes(5, k, 1.0, *V, WidthMode::fixed);
    const CriticalPoint cp = solve_critical(5, k, *V, 1.0, box, SolveMode::max);
    EXPECT_TRUE(cp.converged) << "k = " << k;
    EXPECT_LT(cp.grad_norm, 1e-8);
    for (double m : cp.margins) EXPECT_GT(m, 0.0);
    // the offsets come from the sqrt(1 - h^2) factors and shrink with k
    EXPECT_LT(cp.h_rel_residual, prev_h);
    EXPECT_LT(cp.mu_rel_residual, prev_mu);
    prev_h = cp.h_rel_residual;
    prev_mu = cp.mu_rel_residual;
    EXPECT_NEAR(cp.r_star, 1.0, 1e-8);
    EXPECT_NEAR(cp.h_star, cp.scaled[1] / std::pow(double(k), 0.5), 1e-14);
    EXPECT_NEAR(cp.F, F_main(5, k, cp.r_star, cp.h_star, cp.mu_star, *V).F, 1e-9 * std::abs(cp.F));
  }
  EXPECT_LT(prev_h, 0.05);
  EXPECT_LT(prev_mu, 0.05);
}

TEST(SolveCritical, BrezisNirenbergPotentialHasAnInteriorMaximum) {
  const BrezisNirenbergPotential V(-10.0, 6);
  for (int k : {64, 256}) {
    const ParameterBox box = make_boxes(6, k, 1.0, V, WidthMode::fixed);
    const CriticalPoint cp = solve_critical(6, k, V, 1.0, box, SolveMode::max);
    EXPECT_TRUE(cp.converged) << "k = " << k;
    EXPECT_NEAR(cp.r_star, 1.0, 1e-8);
  }
}

// F sees r only through r^2 V(r) and r mu, so after optimizing mu the radius sits exactly at the
// critical point of s^2 V.
TEST(SolveCritical, MinMaxForTheDipSitsAtItsCenter) {
  const auto V = unit_min_bump();
  for (int k : {128, 512}) {
    const ParameterBox box = make_boxes(6, k, 1.0, *V, WidthMode::shrinking);
    const CriticalPoint cp = solve_critical(6, k, *V, 1.0, box, SolveMode::minmax);
    EXPECT_TRUE(cp.converged) << "k = " << k;
    EXPECT_NEAR(cp.r_star, 1.0, 1e-8);
    for (double m : cp.margins) EXPECT_GT(m, 0.0);
  }
}

TEST(SolveCritical, MisplacedBoxReportsTheFaceItHits) {
  const auto V = unit_max_bump();
  ParameterBox box = make_boxes(5, 128, 1.0, *V, WidthMode::fixed);
  // radial window entirely outside the maximum of s^2 V: the maximum sits on its inner face
  box.lo[0] = 1.25;
  box.hi[0] = 1.45;
  try {
    solve_critical(5, 128, *V, 1.0, box, SolveMode::max);
    FAIL() << "expected a boundary extremum";
  } catch (const BoundaryExtremum& e) {
    EXPECT_EQ(e.face(), Face::r_lo);
    EXPECT_NEAR(e.where()[0], box.lo[0], 1e-12);
  }
  EXPECT_THROW(solve_critical(5, 256, *V, 1.0, box, SolveMode::max), domain_error);
}
