#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "dtower/geometry.hpp"
#include "dtower/potentials.hpp"
#include "dtower/summation.hpp"

namespace dtower {

// Surface area of the unit sphere S^n in R^{n+1}, by the two-step recursion.
inline double sphere_area(int n) {
  if (n < 0) throw domain_error("sphere dimension must be nonnegative");
  double a = (n % 2 == 0) ? 2.0 : 2.0 * std::numbers::pi;
  for (int m = (n % 2 == 0) ? 2 : 3; m <= n; m += 2) a *= 2.0 * std::numbers::pi / (m - 1);
  return a;
}

// Integral over R^N of (1+|z|^2)^{-s}, s > N/2.
inline double power_integral(int N, double s) {
  if (!(s > 0.5 * N)) throw domain_error("power integral diverges for s <= N/2");
  return std::pow(std::numbers::pi, 0.5 * N) * std::exp(std::lgamma(s - 0.5 * N) - std::lgamma(s));
}

// Integral over [0, inf) of (1+z^2)^{-alpha/2}, alpha > 1.
inline double half_line_integral(double alpha) {
  if (!(alpha > 1)) throw domain_error("half-line integral diverges for alpha <= 1");
  return 0.5 * std::sqrt(std::numbers::pi) * std::exp(std::lgamma(0.5 * (alpha - 1)) - std::lgamma(0.5 * alpha));
}

// Riemann zeta for s > 1: partial sums to M-1 plus Euler-Maclaurin tail through the B_6 term.
inline double zeta(double s) {
  if (!(s > 1)) throw domain_error("zeta needs s > 1");
  constexpr int M = 64;
  CompensatedSum acc;
  for (int n = M - 1; n >= 1; --n) acc.add(std::pow(double(n), -s));
  const double m = M;
  double tail = std::pow(m, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(m, -s);
  tail += s / 12.0 * std::pow(m, -s - 1.0);
  tail -= s * (s + 1) * (s + 2) / 720.0 * std::pow(m, -s - 3.0);
  tail += s * (s + 1) * (s + 2) * (s + 3) * (s + 4) / 30240.0 * std::pow(m, -s - 5.0);
  acc.add(tail);
  return acc.value();
}

struct ReductionConstants {
  int N = 0;
  double CN = 0;    // bubble normalization
  double A1 = 0;    // (2/N) int U^{2*}
  double A2 = 0;    // int U^2
  double B0 = 0;    // C_N^{2*} int (1+|z|^2)^{-(N+2)/2}
  double B1 = 0;    // same-ring lattice coefficient
  double B2 = 0;    // cross-ring lattice coefficient
  double A3 = 0;
  double h0 = 0;

  double B3(double r) const { return B0 * B1 / std::pow(r, N - 2); }
  double B4(double r) const { return B0 * B2 / std::pow(r, N - 2); }
  double mu0(double r, double Vr) const {
    if (!(Vr > 0)) throw domain_error("V(r) must be positive");
    return std::pow((N - 2) * B0 * B1 / (2.0 * A2 * Vr * std::pow(r, N - 2)), 1.0 / (N - 4));
  }
  double critical_exponent() const { return 2.0 * N / (N - 2); }
  // int U^{2*} = (N/2) A1
  double bubble_energy() const { return 0.5 * N * A1; }
};

inline ReductionConstants compute_constants(int N) {
  Dimension dim(N);
  ReductionConstants c;
  c.N = N;
  c.CN = dim.normalization();
  const double ts = dim.critical_exponent();
  const double cts = std::pow(c.CN, ts);
  c.A1 = 2.0 / N * cts * power_integral(N, N);
  c.A2 = c.CN * c.CN * power_integral(N, N - 2);
  c.B0 = cts * power_integral(N, 0.5 * (N + 2));
  c.B1 = 2.0 / std::pow(2.0 * std::numbers::pi, N - 2) * zeta(N - 2);
  c.B2 = half_line_integral(N - 2) / (std::pow(2.0, N - 3) * std::numbers::pi);
  c.h0 = std::pow((N - 3) * c.B2 / ((N - 2) * c.B1), 1.0 / (N - 1));
  c.A3 = (N - 4) * c.A2 / (N - 2) * std::pow(2.0 * c.A2 / ((N - 2) * c.B0 * c.B1), 2.0 / (N - 4));
  return c;
}

inline const ReductionConstants& eval_constants(int N) {
  static std::mutex guard;
  static std::map<int, ReductionConstants> cache;
  std::lock_guard lock(guard);
  auto it = cache.find(N);
  if (it == cache.end()) it = cache.emplace(N, compute_constants(N)).first;
  return it->second;
}

struct CrosscheckEntry {
  std::string name;
  double closed_form;
  double numeric;
  double rel_diff;
};

struct CrosscheckReport {
  int N;
  double tol;
  std::vector<CrosscheckEntry> entries;
  double B0;
  double half_N_A1;
  double ratio;  // B0 / ((N/2) A1)
  bool passed;
  double max_rel_diff;
};

namespace detail {

template <class F>
double half_line_quadrature(F f) {
  boost::math::quadrature::exp_sinh<double> integrator;
  return integrator.integrate(f, 1e-15);
}

inline double radial_power_quadrature(int N, double s) {
  // |S^{N-1}| int_0^inf rho^{N-1} (1+rho^2)^{-s} d rho
  return sphere_area(N - 1) *
         half_line_quadrature([&](double rho) {
           // in logs, so large rho does not produce inf * 0
           if (rho == 0) return 0.0;
           return std::exp((N - 1) * std::log(rho) - s * std::log1p(rho * rho));
         });
}

inline double zeta_by_quadrature(int s) {
  // zeta(s) Gamma(s) = int_0^inf x^{s-1} / (e^x - 1) dx
  double factorial = 1.0;
  for (int n = 2; n < s; ++n) factorial *= n;
  const double integral = half_line_quadrature([&](double x) {
    if (x == 0) return 0.0;
    if (x > 700) return std::exp((s - 1) * std::log(x) - x);
    return std::pow(x, s - 1) / std::expm1(x);
  });
  return integral / factorial;
}

}  // namespace detail

inline CrosscheckReport crosscheck_constants(int N, double tol) {
  if (!(tol > 0)) throw domain_error("tol must be positive");
  const ReductionConstants& c = eval_constants(N);
  const double ts = c.critical_exponent();
  const double cts = std::pow(c.CN, ts);
  CrosscheckReport rep{N, tol, {}, c.B0, 0.5 * N * c.A1, c.B0 / (0.5 * N * c.A1), true, 0.0};
  auto add = [&](std::string name, double closed, double numeric) {
    const double rel = std::abs(closed - numeric) / std::abs(closed);
    rep.entries.push_back({std::move(name), closed, numeric, rel});
    rep.max_rel_diff = std::max(rep.max_rel_diff, rel);
    if (!(rel <= tol)) rep.passed = false;
  };
  add("A1", c.A1, 2.0 / N * cts * detail::radial_power_quadrature(N, N));
  add("A2", c.A2, c.CN * c.CN * detail::radial_power_quadrature(N, N - 2));
  add("B0", c.B0, cts * detail::radial_power_quadrature(N, 0.5 * (N + 2)));
  add("B1", c.B1,
      2.0 / std::pow(2.0 * std::numbers::pi, N - 2) * detail::zeta_by_quadrature(N - 2));
  const double alpha = N - 2;
  add("B2", c.B2,
      detail::half_line_quadrature([&](double z) { return std::pow(1.0 + z * z, -0.5 * alpha); }) /
          (std::pow(2.0, N - 3) * std::numbers::pi));
  return rep;
}

struct CriticalScalars {
  double h0;
  double mu0;
  double H0;
  double Lambda0;
  double A3;
  bool scaling_regime;  // H0 < 1
};

inline CriticalScalars critical_scalars(int N, const RadialPotential& V, double r, int k) {
  if (k < 2) throw domain_error("k must be at least 2");
  if (!(r > 0)) throw domain_error("r must be positive");
  const double Vr = V.value(r);
  if (!(Vr > 0)) throw domain_error("V(r) must be positive");
  const ReductionConstants& c = eval_constants(N);
  CriticalScalars s;
  s.h0 = c.h0;
  s.mu0 = c.mu0(r, Vr);
  s.H0 = c.h0 * std::pow(double(k), -double(N - 3) / (N - 1));
  s.Lambda0 = s.mu0 * std::pow(double(k), double(N - 2) / (N - 4));
  s.A3 = c.A3;
  s.scaling_regime = s.H0 < 1.0;
  return s;
}

}  // namespace dtower
