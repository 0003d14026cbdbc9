#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "dtower/constants.hpp"
#include "dtower/geometry.hpp"
#include "dtower/lattice_sums.hpp"
#include "dtower/potentials.hpp"

namespace dtower {

struct RemainderModel {
  double sigma = 0.1;  // small exponent in the O-terms; a modelling knob, not a derived value
};

struct ReducedTerms {
  double constant = 0.0;    // k A1
  double potential = 0.0;   // k A2 V(r) / mu^2
  double same_ring = 0.0;   // negative
  double cross_ring = 0.0;  // negative

  double non_constant() const { return potential + same_ring + cross_ring; }
};

struct ReducedValue {
  double F = 0.0;
  ReducedTerms terms;
  double remainder_budget = 0.0;
};

namespace detail {

inline void check_reduced_args(int N, int k, double r, double h, double mu, const RadialPotential& V) {
  Dimension{N};
  if (k < 2) throw domain_error("k must be at least 2");
  if (!(r > 0)) throw domain_error("r must be positive");
  if (h == 0.0) throw domain_error("h = 0 makes the cross-ring term singular");
  if (!(h > 0 && h < 1)) throw domain_error("h must lie in (0,1)");
  if (!(mu > 0)) throw domain_error("mu must be positive");
  if (!(V.value(r) > 0)) throw domain_error("V(r) must be positive");
}

inline double remainder_budget(int N, int k, double h, double mu, const RemainderModel& m) {
  const double kk = k;
  return kk * std::pow(kk / mu, N - m.sigma) + kk * std::pow(kk, N - 4) * std::log(kk) / std::pow(mu, N - 2) +
         kk / (std::pow(mu, N - 2) * std::pow(h, N - 2));
}

}  // namespace detail

// Main term of the reduced energy with the two ring sums replaced by their leading laws.
inline ReducedValue F_main(int N, int k, double r, double h, double mu, const RadialPotential& V,
                           const RemainderModel& model = {}) {
  detail::check_reduced_args(N, k, r, h, mu, V);
  const ReductionConstants& c = eval_constants(N);
  const double kk = k, s = std::sqrt(1.0 - h * h);
  const double mu_pow = std::pow(mu, N - 2);
  ReducedValue out;
  out.terms.constant = kk * c.A1;
  out.terms.potential = kk * c.A2 * V.value(r) / (mu * mu);
  out.terms.same_ring = -kk * c.B3(r) * std::pow(kk, N - 2) / (mu_pow * std::pow(s, N - 2));
  out.terms.cross_ring = -kk * c.B4(r) * kk / (mu_pow * std::pow(h, N - 3) * s);
  out.F = out.terms.constant + out.terms.potential + out.terms.same_ring + out.terms.cross_ring;
  out.remainder_budget = detail::remainder_budget(N, k, h, mu, model);
  return out;
}

// As F_main, but the ring sums are the exact lattice sums over the actual center distances.
// With use_leading_laws the sums fall back to their asymptotic laws and the result equals F_main.
inline ReducedValue F_semi(const Configuration& cfg, const RadialPotential& V, bool use_leading_laws = false,
                           const RemainderModel& model = {}) {
  cfg.validate();
  detail::check_reduced_args(cfg.N, cfg.k, cfg.r, cfg.h, cfg.mu, V);
  const int N = cfg.N;
  const ReductionConstants& c = eval_constants(N);
  const double kk = cfg.k;
  SumQuery q{N, cfg.k, cfg.r, cfg.h, double(N - 2), RingKind::same, SumWeight::one};
  const double same = use_leading_laws ? sum_asymptotic(q).leading : sum_exact(q);
  q.ring = RingKind::cross;
  const double cross = use_leading_laws ? sum_asymptotic(q).leading : sum_exact(q);
  const double scale = c.B0 / std::pow(cfg.mu, N - 2);
  ReducedValue out;
  out.terms.constant = kk * c.A1;
  out.terms.potential = kk * c.A2 * V.value(cfg.r) / (cfg.mu * cfg.mu);
  out.terms.same_ring = -kk * scale * same;
  out.terms.cross_ring = -kk * scale * cross;
  out.F = out.terms.constant + out.terms.potential + out.terms.same_ring + out.terms.cross_ring;
  out.remainder_budget = detail::remainder_budget(N, cfg.k, cfg.h, cfg.mu, model);
  return out;
}

struct ReducedGradient {
  double dF_dr = 0.0;
  double dF_dh = 0.0;
  double dF_dmu = 0.0;
};

inline ReducedGradient grad_main(int N, int k, double r, double h, double mu, const RadialPotential& V) {
  detail::check_reduced_args(N, k, r, h, mu, V);
  const ReductionConstants& c = eval_constants(N);
  const double kk = k, s = std::sqrt(1.0 - h * h);
  const double mu_pow = std::pow(mu, N - 2);
  const double B3 = c.B3(r), B4 = c.B4(r);
  const double same = kk * B3 * std::pow(kk, N - 2) / (mu_pow * std::pow(s, N - 2));  // magnitude
  const double cross = kk * B4 * kk / (mu_pow * std::pow(h, N - 3) * s);
  ReducedGradient g;
  g.dF_dr = kk * c.A2 * V.derivative(r) / (mu * mu) + (N - 2) / r * (same + cross);
  g.dF_dh = kk * (-(N - 2) * B3 * std::pow(kk, N - 2) * h / (mu_pow * std::pow(s, N)) +
                  (N - 3) * B4 * kk / (mu_pow * std::pow(h, N - 2) * s) -
                  B4 * kk / (mu_pow * std::pow(h, N - 4) * s * s * s));
  g.dF_dmu = kk * (-2.0 * c.A2 * V.value(r) / (mu * mu * mu) +
                   (N - 2) * B3 * std::pow(kk, N - 2) / (mu_pow * mu * std::pow(s, N - 2)) +
                   (N - 2) * B4 * kk / (mu_pow * mu * std::pow(h, N - 3) * s));
  return g;
}

// Variables scaled so the box is k-independent: z = (r, h k^{(N-3)/(N-1)}, mu k^{-(N-2)/(N-4)}).
// The objective is the energy gain over k A1 divided by its natural size A3 k^{1 - 2(N-2)/(N-4)},
// with the sign flipped so maxima of F become minima.
struct ScaledObjective {
  int N;
  int k;
  const RadialPotential* V;

  double h_scale() const { return std::pow(double(k), double(N - 3) / (N - 1)); }
  double mu_scale() const { return std::pow(double(k), -double(N - 2) / (N - 4)); }
  double normalizer() const {
    return eval_constants(N).A3 * std::pow(double(k), 1.0 - 2.0 * (N - 2) / (N - 4));
  }
  std::array<double, 3> to_raw(const std::array<double, 3>& z) const {
    return {z[0], z[1] / h_scale(), z[2] / mu_scale()};
  }
  std::array<double, 3> to_scaled(double r, double h, double mu) const { return {r, h * h_scale(), mu * mu_scale()}; }

  double value(const std::array<double, 3>& z) const {
    const auto x = to_raw(z);
    return -F_main(N, k, x[0], x[1], x[2], *V).terms.non_constant() / normalizer();
  }
  std::array<double, 3> gradient(const std::array<double, 3>& z) const {
    const auto x = to_raw(z);
    const auto g = grad_main(N, k, x[0], x[1], x[2], *V);
    const double n = normalizer();
    return {-g.dF_dr / n, -g.dF_dh / (h_scale() * n), -g.dF_dmu / (mu_scale() * n)};
  }
  // Phi expressed back as an energy level of -F
  double energy_level(double phi) const { return -k * eval_constants(N).A1 + phi * normalizer(); }
  double phi_of_level(double level) const { return (level + k * eval_constants(N).A1) / normalizer(); }
};

enum class WidthMode { fixed, shrinking };

enum class Face { r_lo, r_hi, h_lo, h_hi, mu_lo, mu_hi, none };

inline std::string to_string(Face f) {
  static const char* names[] = {"r_lo", "r_hi", "h_lo", "h_hi", "mu_lo", "mu_hi", "none"};
  return names[int(f)];
}

struct ParameterBox {
  int N = 5;
  int k = 2;
  double r0 = 1.0;
  double h0 = 0.0;   // scaled centers
  double mu0 = 0.0;
  double width = 0.0;
  WidthMode mode = WidthMode::fixed;
  bool exponent_anomaly = false;  // shrinking width requested where its exponent has the wrong sign
  std::array<double, 3> lo{};     // scaled coordinates
  std::array<double, 3> hi{};

  double r_lo() const { return lo[0]; }
  double r_hi() const { return hi[0]; }
  double h_lo() const { return lo[1] / std::pow(double(k), double(N - 3) / (N - 1)); }
  double h_hi() const { return hi[1] / std::pow(double(k), double(N - 3) / (N - 1)); }
  double mu_lo() const { return lo[2] / std::pow(double(k), -double(N - 2) / (N - 4)); }
  double mu_hi() const { return hi[2] / std::pow(double(k), -double(N - 2) / (N - 4)); }
  std::array<double, 3> center() const { return {r0, h0, mu0}; }
  bool contains(const std::array<double, 3>& z) const {
    for (int i = 0; i < 3; ++i)
      if (z[std::size_t(i)] < lo[std::size_t(i)] || z[std::size_t(i)] > hi[std::size_t(i)]) return false;
    return true;
  }
};

// Exponent of the shrinking width k^{-e}; e = 2(N^2 - 7N + 9) / ((N-4)(N-1)).
inline double shrinking_exponent(int N) { return 2.0 * (N * N - 7 * N + 9) / double((N - 4) * (N - 1)); }

inline double default_fixed_width(int N, double r0, const RadialPotential& V) {
  const ReductionConstants& c = eval_constants(N);
  return 0.5 * std::min({c.h0, c.mu0(r0, V.value(r0)), r0});
}

inline ParameterBox make_boxes(int N, int k, double r0, const RadialPotential& V, WidthMode mode,
                               double fixed_width = 0.0) {
  Dimension{N};
  if (k < 2) throw domain_error("k must be at least 2");
  if (!(r0 > 0)) throw domain_error("r0 must be positive");
  const CriticalScalars cs = critical_scalars(N, V, r0, k);
  if (!cs.scaling_regime) throw domain_error("infeasible box: H0 = h0 k^{-(N-3)/(N-1)} must be below 1");
  ParameterBox box;
  box.N = N;
  box.k = k;
  box.r0 = r0;
  box.h0 = cs.h0;
  box.mu0 = cs.mu0;
  box.mode = mode;
  const double sigma_hat = fixed_width > 0 ? fixed_width : default_fixed_width(N, r0, V);
  double width = sigma_hat;
  if (mode == WidthMode::shrinking) {
    const double e = shrinking_exponent(N);
    if (e <= 0) {
      box.exponent_anomaly = true;  // k^{-e} would grow with k; keep the fixed width
    } else {
      width = std::pow(double(k), -e);
      const double limit = 0.5 * std::min({cs.h0, cs.mu0, r0});
      if (!(width < limit))
        throw domain_error("infeasible box: shrinking width " + std::to_string(width) +
                           " must be below min(h0, mu0, r0)/2 = " + std::to_string(limit));
    }
  }
  box.width = width;
  if (!(cs.h0 - width > 0)) throw domain_error("infeasible box: h0 - width must be positive");
  if (!(cs.mu0 - width > 0)) throw domain_error("infeasible box: mu0 - width must be positive");
  if (!(r0 - width > 0)) throw domain_error("infeasible box: r0 - width must be positive");
  if (!((cs.h0 + width) * std::pow(double(k), -double(N - 3) / (N - 1)) < 1))
    throw domain_error("infeasible box: upper h face must lie below 1");
  box.lo = {r0 - width, cs.h0 - width, cs.mu0 - width};
  box.hi = {r0 + width, cs.h0 + width, cs.mu0 + width};
  return box;
}

}  // namespace dtower
