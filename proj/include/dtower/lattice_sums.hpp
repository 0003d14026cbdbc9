#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "dtower/constants.hpp"
#include "dtower/geometry.hpp"
#include "dtower/summation.hpp"

namespace dtower {

enum class RingKind { same, cross };
enum class SumWeight { one, one_minus_cos, none_power_N };

struct SumQuery {
  int N = 5;
  int k = 2;
  double r = 1.0;
  double h = 0.0;
  double alpha = 3.0;
  RingKind ring = RingKind::same;
  SumWeight weight = SumWeight::one;

  double exponent() const { return weight == SumWeight::none_power_N ? double(N) : alpha; }
};

namespace detail {

inline void validate(const SumQuery& q) {
  Dimension{q.N};
  if (!(q.r > 0)) throw domain_error("r must be positive");
  if (!(q.h >= 0 && q.h < 1)) throw domain_error("h must lie in [0,1)");
  if (!(q.exponent() >= 1)) throw domain_error("alpha must be at least 1");
  if (q.ring == RingKind::same && q.k < 2) throw domain_error("same-ring sums need k >= 2");
  if (q.ring == RingKind::cross && q.k < 1) throw domain_error("cross-ring sums need k >= 1");
  if (q.ring == RingKind::cross && q.h == 0 && q.weight != SumWeight::one_minus_cos)
    throw domain_error("cross-ring sum at h = 0 has a zero distance at j = 1");
}

// Summand for index j (1-based) of the chosen ring.
inline double summand(const SumQuery& q, int j) {
  const double half_angle = (j - 1) * std::numbers::pi / q.k;
  const double sn = std::sin(half_angle);
  const double s2 = 1.0 - q.h * q.h;
  double d;
  if (q.ring == RingKind::same)
    d = 2.0 * q.r * std::sqrt(s2) * sn;
  else
    d = 2.0 * q.r * std::sqrt(s2 * sn * sn + q.h * q.h);
  const double w = q.weight == SumWeight::one_minus_cos ? 2.0 * sn * sn : 1.0;
  if (w == 0.0) return 0.0;
  return w * std::pow(d, -q.exponent());
}

}  // namespace detail

// Direct summation with the reflection pairing j <-> k + 2 - j.
inline double sum_exact(const SumQuery& q) {
  detail::validate(q);
  CompensatedSum acc;
  if (q.ring == RingKind::cross) acc.add(detail::summand(q, 1));
  const int half = q.k / 2;
  for (int j = 2; j <= half + 1; ++j) {
    const bool middle = (q.k % 2 == 0) && (j == half + 1);
    acc.add((middle ? 1.0 : 2.0) * detail::summand(q, j));
  }
  return acc.value();
}

// Plain left-to-right summation; reference for the paired version.
inline double sum_naive(const SumQuery& q) {
  detail::validate(q);
  CompensatedSum acc;
  for (int j = q.ring == RingKind::same ? 2 : 1; j <= q.k; ++j) acc.add(detail::summand(q, j));
  return acc.value();
}

enum class SumLaw { b3, b4, b5, b6, b7 };
enum class CorrectionModel { zeta1, zeta2 };

inline std::string to_string(SumLaw law) {
  static const char* names[] = {"b3", "b4", "b5", "b6", "b7"};
  return names[int(law)];
}

struct AsymptoticResult {
  SumLaw law;
  double leading;
  CorrectionModel correction_model;
  double predicted_rate;   // exponent of k (zeta1) or of hk (zeta2)
  bool log_corrected;      // zeta1 at N = 5 carries ln k
  bool regime_warning;     // cross-ring law with hk < 5
};

inline SumLaw classify(const SumQuery& q) {
  const double p = q.exponent();
  const bool unit = q.weight != SumWeight::one_minus_cos;
  if (q.ring == RingKind::same && unit && p == q.N - 2) return SumLaw::b3;
  if (q.ring == RingKind::cross && unit && p == q.N - 2) return SumLaw::b4;
  if (q.ring == RingKind::same && !unit && p == q.N) return SumLaw::b5;
  if (q.ring == RingKind::cross && !unit && p == q.N) return SumLaw::b6;
  if (q.ring == RingKind::cross && unit && p == q.N) return SumLaw::b7;
  throw domain_error("no asymptotic law for this ring/weight/exponent combination");
}

inline AsymptoticResult sum_asymptotic(const SumQuery& q) {
  detail::validate(q);
  const SumLaw law = classify(q);
  const ReductionConstants& c = eval_constants(q.N);
  const int N = q.N;
  const double k = q.k, r = q.r, h = q.h, s = std::sqrt(1.0 - h * h);
  AsymptoticResult out{law, 0.0, CorrectionModel::zeta1, 2.0, N == 5, false};
  switch (law) {
    case SumLaw::b3: out.leading = c.B1 * std::pow(k, N - 2) / std::pow(r * s, N - 2); break;
    case SumLaw::b5: out.leading = 0.5 * c.B1 * std::pow(k, N - 2) / std::pow(r * s, N); break;
    case SumLaw::b4:
      out.leading = c.B2 * k / (std::pow(r, N - 2) * std::pow(h, N - 3) * s);
      break;
    case SumLaw::b6:
      out.leading = c.B2 * k / (2.0 * (N - 2) * std::pow(r, N) * std::pow(h, N - 3) * s * s * s);
      break;
    case SumLaw::b7:
      // cross-ring distances carry the factor 2r, hence the 1/4 against r^N h^2 scaling
      out.leading = (N - 3) * c.B2 * k / (4.0 * (N - 2) * std::pow(r, N) * std::pow(h, N - 1) * s);
      break;
  }
  if (law == SumLaw::b4 || law == SumLaw::b7) {
    out.correction_model = CorrectionModel::zeta2;
    out.predicted_rate = 1.0;
    out.log_corrected = false;
  }
  if (q.ring == RingKind::cross) out.regime_warning = h * k < 5.0;
  return out;
}

struct RatePoint {
  int k;
  double h;
  double regressor;  // k or hk
  double exact;
  double leading;
  double contamination;
  double rel_err;
};

struct RateFit {
  std::vector<RatePoint> points;
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // RMS of the log-log fit
  bool saturated = false;
  std::string regressor;  // "k" or "hk"
};

// The same-ring excess over its leading law: the zeta1-type term carried by (b4)/(b6).
inline double cross_contamination(const SumQuery& q) {
  SumQuery same = q;
  same.ring = RingKind::same;
  if (classify(q) == SumLaw::b6) {
    same.weight = SumWeight::one_minus_cos;
  } else {
    same.weight = SumWeight::one;
    same.alpha = q.N - 2;
  }
  return sum_exact(same) - sum_asymptotic(same).leading;
}

template <class HRule>
RateFit rate_study(const SumQuery& proto, const std::vector<int>& k_list, HRule h_rule,
                   bool subtract_contamination = true) {
  if (k_list.size() < 4) throw domain_error("rate study needs at least 4 k values");
  for (std::size_t i = 1; i < k_list.size(); ++i)
    if (k_list[i] <= k_list[i - 1]) throw domain_error("k list must be increasing");
  RateFit fit;
  const SumLaw law = classify(proto);
  const bool cross = proto.ring == RingKind::cross;
  for (int k : k_list) {
    SumQuery q = proto;
    q.k = k;
    q.h = h_rule(k);
    const double exact = sum_exact(q);
    const double leading = sum_asymptotic(q).leading;
    double contamination = 0.0;
    if (subtract_contamination && (law == SumLaw::b4 || law == SumLaw::b6)) contamination = cross_contamination(q);
    const double rel = (exact - contamination) / leading - 1.0;
    fit.points.push_back({k, q.h, cross ? q.h * k : double(k), exact, leading, contamination, rel});
  }
  bool use_k = !cross;
  if (cross) {
    const double first = fit.points.front().regressor;
    bool constant = true;
    for (const auto& p : fit.points) constant = constant && std::abs(p.regressor - first) <= 1e-9 * first;
    use_k = constant;
  }
  fit.regressor = use_k ? "k" : "hk";
  std::vector<double> xs, ys;
  for (const auto& p : fit.points) {
    if (std::abs(p.rel_err) < 1e-13) continue;
    xs.push_back(std::log(use_k ? double(p.k) : p.regressor));
    ys.push_back(std::log(std::abs(p.rel_err)));
  }
  if (xs.size() < 2) {
    fit.saturated = true;
    return fit;
  }
  const double n = double(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i] / n;
    my += ys[i] / n;
  }
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  fit.slope = sxx > 0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  double rss = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (fit.intercept + fit.slope * xs[i]);
    rss += e * e;
  }
  fit.residual = std::sqrt(rss / n);
  return fit;
}

}  // namespace dtower
