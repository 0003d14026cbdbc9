#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dtower/lattice_sums.hpp"

using namespace dtower;

namespace {

SumQuery query(int N, int k, double r, double h, double alpha, RingKind ring, SumWeight w = SumWeight::one) {
  SumQuery q;
  q.N = N;
  q.k = k;
  q.r = r;
  q.h = h;
  q.alpha = alpha;
  q.ring = ring;
  q.weight = w;
  return q;
}

}  // namespace

TEST(SumExact, SmallCases) {
  EXPECT_NEAR(sum_exact(query(5, 2, 1, 0, 1, RingKind::same)), 0.5, 1e-15);
  // distances sqrt2, 2, sqrt2
  EXPECT_NEAR(sum_exact(query(5, 4, 1, 0, 3, RingKind::same)), 2 / std::pow(std::sqrt(2.0), 3) + 0.125, 1e-15);
  EXPECT_NEAR(sum_exact(query(5, 4, 1, 0, 3, RingKind::same)), 0.832107, 1e-6);
  EXPECT_NEAR(sum_exact(query(5, 1, 1, 0.25, 3, RingKind::cross)), 8.0, 1e-14);
}

TEST(SumExact, AgreesWithNaiveSummation) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> unit;
  for (int s = 0; s < 200; ++s) {
    const int N = 5 + s % 4;
    const int k = 2 + int(unit(rng) * 300);
    const double h = 0.01 + 0.9 * unit(rng);
    const RingKind ring = s % 2 ? RingKind::cross : RingKind::same;
    const SumWeight w = s % 3 == 0 ? SumWeight::one_minus_cos : SumWeight::one;
    const SumQuery q = query(N, k, 0.5 + unit(rng), h, 1 + (N - 1) * unit(rng), ring, w);
    EXPECT_NEAR(sum_exact(q), sum_naive(q), 1e-13 * sum_naive(q));
  }
}

TEST(SumExact, GrowsWithK) {
  double prev = 0;
  for (int k = 2; k <= 200; ++k) {
    const double v = sum_exact(query(5, k, 1, 0.1, 3, RingKind::same));
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(SumExact, RejectsDegenerateQueries) {
  EXPECT_THROW(sum_exact(query(5, 1, 1, 0.1, 3, RingKind::same)), domain_error);
  EXPECT_THROW(sum_exact(query(5, 4, 1, 0.0, 3, RingKind::cross)), domain_error);
  EXPECT_THROW(sum_exact(query(4, 4, 1, 0.1, 3, RingKind::same)), domain_error);
  EXPECT_THROW(sum_exact(query(5, 4, 1, 0.1, 0.5, RingKind::same)), domain_error);
  EXPECT_THROW(sum_exact(query(5, 4, -1, 0.1, 3, RingKind::same)), domain_error);
  EXPECT_NO_THROW(sum_exact(query(5, 4, 1, 0.0, 3, RingKind::cross, SumWeight::one_minus_cos)));
}

TEST(SumAsymptotic, SameRingAtZeroHeight) {
  const ReductionConstants& c = eval_constants(5);
  for (int k : {10, 100, 1000}) {
    const auto a = sum_asymptotic(query(5, k, 1, 0, 3, RingKind::same));
    EXPECT_EQ(a.law, SumLaw::b3);
    EXPECT_NEAR(a.leading, c.B1 * std::pow(k, 3), 1e-12 * a.leading);
    EXPECT_TRUE(a.log_corrected);
  }
}

TEST(SumAsymptotic, CrossRingHeightPowerLaw) {
  for (int N = 5; N <= 7; ++N) {
    const double h = 0.1;
    const double a1 = sum_asymptotic(query(N, 50, 1, h, N - 2, RingKind::cross)).leading;
    const double a2 = sum_asymptotic(query(N, 50, 1, 2 * h, N - 2, RingKind::cross)).leading;
    const double s1 = std::sqrt(1 - h * h), s2 = std::sqrt(1 - 4 * h * h);
    EXPECT_NEAR(a2 / a1, std::pow(2.0, -(N - 3)) * s1 / s2, 1e-14);
  }
}

TEST(SumAsymptotic, SameRingLeadingTermAtLargeK) {
  const SumQuery q = query(5, 400, 1, 0.01, 3, RingKind::same);
  EXPECT_NEAR(sum_exact(q) / sum_asymptotic(q).leading, 1.0, 0.01);
}

// Each leading law against a sum far in its regime (k large, hk large, h small).
TEST(SumAsymptotic, LeadingLawsMatchExactSums) {
  for (int N : {5, 6, 7}) {
    const int k = 20000;
    const double h = 0.005;  // hk = 100
    struct Case {
      RingKind ring;
      SumWeight w;
      double alpha;
      SumLaw law;
    };
    for (const Case& c : {Case{RingKind::same, SumWeight::one, double(N - 2), SumLaw::b3},
                          Case{RingKind::cross, SumWeight::one, double(N - 2), SumLaw::b4},
                          Case{RingKind::same, SumWeight::one_minus_cos, double(N), SumLaw::b5},
                          Case{RingKind::cross, SumWeight::one_minus_cos, double(N), SumLaw::b6},
                          Case{RingKind::cross, SumWeight::one, double(N), SumLaw::b7}}) {
      SumQuery q = query(N, k, 1.3, h, c.alpha, c.ring, c.w);
      const AsymptoticResult a = sum_asymptotic(q);
      EXPECT_EQ(a.law, c.law);
      EXPECT_FALSE(a.regime_warning);
      EXPECT_NEAR(sum_exact(q) / a.leading, 1.0, 1e-3) << "N " << N << " law " << to_string(c.law);
    }
  }
}

TEST(SumAsymptotic, RegimeWarningAndUnknownLaws) {
  EXPECT_TRUE(sum_asymptotic(query(5, 10, 1, 0.1, 3, RingKind::cross)).regime_warning);
  EXPECT_FALSE(sum_asymptotic(query(5, 100, 1, 0.1, 3, RingKind::cross)).regime_warning);
  EXPECT_THROW(sum_asymptotic(query(5, 100, 1, 0.1, 2, RingKind::same)), domain_error);
}

TEST(RateStudy, SameRingRates) {
  const std::vector<int> ks{50, 100, 200, 400, 800};
  const RateFit n6 = rate_study(query(6, 2, 1, 0.01, 4, RingKind::same), ks, [](int) { return 0.01; });
  EXPECT_NEAR(n6.slope, -2.0, 0.3);
  EXPECT_EQ(n6.regressor, "k");
  const RateFit n5 = rate_study(query(5, 2, 1, 0.01, 3, RingKind::same), ks, [](int) { return 0.01; });
  EXPECT_GE(n5.slope, -2.3);
  EXPECT_LE(n5.slope, -1.6);
  EXPECT_FALSE(n5.saturated);
}

// At fixed small h the cross-ring error is driven by hk.
TEST(RateStudy, CrossRingErrorDecaysInHk) {
  const RateFit fit = rate_study(query(5, 2, 1, 0.002, 3, RingKind::cross), {2500, 5000, 10000, 20000, 40000},
                                 [](int) { return 0.002; });
  EXPECT_EQ(fit.regressor, "hk");
  EXPECT_LT(fit.slope, -0.5);
}

// Along hk = 20 the cross-ring error is not a function of hk: it falls like h^2.
TEST(RateStudy, CrossRingErrorAtFixedHkFallsLikeHSquared) {
  for (int N : {5, 6}) {
    auto err = [&](int k) {
      const SumQuery q = query(N, k, 1, 20.0 / k, N - 2, RingKind::cross);
      return sum_exact(q) / sum_asymptotic(q).leading - 1.0;
    };
    const double ratio = err(1600) / err(3200);
    EXPECT_GT(ratio, 3.0) << "N " << N;
    EXPECT_LT(ratio, 4.5) << "N " << N;
  }
}

TEST(RateStudy, RejectsShortOrUnsortedLists) {
  const SumQuery q = query(5, 2, 1, 0.01, 3, RingKind::same);
  auto h = [](int) { return 0.01; };
  EXPECT_THROW(rate_study(q, {10, 20, 40}, h), domain_error);
  EXPECT_THROW(rate_study(q, {10, 40, 20, 80}, h), domain_error);
}
