#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "dtower/constants.hpp"

namespace dtower {

struct QuadratureSpec {
  double rel_tol = 1e-10;
  double abs_tol = 0.0;
  int max_subdivisions = 20;  // bisection depth per panel

  void validate() const {
    if (!(rel_tol > 0)) throw domain_error("rel_tol must be positive");
    if (!(abs_tol >= 0)) throw domain_error("abs_tol must be nonnegative");
    if (max_subdivisions < 1) throw domain_error("max_subdivisions must be positive");
  }
  QuadratureSpec inner() const { return {std::max(rel_tol * 0.1, 1e-14), abs_tol * 0.1, max_subdivisions}; }
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  double l1 = 0.0;
};

class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(double best, double achieved)
      : std::runtime_error("quadrature tolerance not reached: estimate " + std::to_string(best) +
                           ", achieved error " + std::to_string(achieved)),
        best_(best),
        achieved_(achieved) {}
  double best_estimate() const { return best_; }
  double achieved_error() const { return achieved_; }

 private:
  double best_;
  double achieved_;
};

// How integrands behave on semi-infinite panels. Algebraic tails (bubble products) are mapped by
// t = a/s, which turns a power decay into a bounded integrand on (0, 1]; fast (e.g. Gaussian) tails
// keep the default mapping, since inversion would squeeze them into a spike at s = 1.
enum class Tails { fast, algebraic };

// Adaptive 15-point Gauss-Kronrod on consecutive panels; breaks may start/end at +-inf.
// Accuracy is judged against the L1 norm so that sign-changing integrands are admissible.
template <class F>
QuadResult integrate_panels(F&& f, const std::vector<double>& breaks, const QuadratureSpec& spec,
                            bool check = true, Tails tails = Tails::fast) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  QuadResult out;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = breaks[i], b = breaks[i + 1];
    if (!(b > a)) continue;
    double err = 0, l1 = 0, v = 0;
    const unsigned depth = unsigned(spec.max_subdivisions);
    const bool invert = tails == Tails::algebraic;
    if (invert && std::isinf(b) && a >= 1.0) {
      v = GK::integrate([&](double s) { return s > 0 ? f(a / s) * a / (s * s) : 0.0; }, 0.0, 1.0, depth, spec.rel_tol, &err, &l1);
    } else if (invert && std::isinf(a) && b <= -1.0) {
      v = GK::integrate([&](double s) { return s > 0 ? f(b / s) * -b / (s * s) : 0.0; }, 0.0, 1.0, depth, spec.rel_tol, &err, &l1);
    } else {
      v = GK::integrate(f, a, b, depth, spec.rel_tol, &err, &l1);
    }
    out.value += v;
    out.error += err;
    out.l1 += l1;
  }
  if (check && out.error > std::max(spec.rel_tol * out.l1, spec.abs_tol)) throw QuadratureError(out.value, out.error);
  return out;
}

// Sorted breakpoints clustered geometrically (ratio 8) around each center, starting at `width`.
inline std::vector<double> graded_breaks(const std::vector<double>& centers, double width, double lo, double hi) {
  std::vector<double> b;
  if (std::isfinite(lo)) b.push_back(lo);
  if (std::isfinite(hi)) b.push_back(hi);
  double span = 0;
  for (double c : centers)
    for (double d : centers) span = std::max(span, std::abs(c - d));
  span = std::max(span, 64.0 * width);
  for (double c : centers) {
    b.push_back(c);
    for (double w = width; w <= 4.0 * span; w *= 8.0) {
      b.push_back(c - w);
      b.push_back(c + w);
    }
  }
  std::sort(b.begin(), b.end());
  std::vector<double> out;
  if (!std::isfinite(lo)) out.push_back(-std::numeric_limits<double>::infinity());
  for (double x : b) {
    if (x < lo || x > hi) continue;
    if (!out.empty() && std::isfinite(out.back()) && x - out.back() <= 1e-12 * std::max(1.0, std::abs(x))) continue;
    out.push_back(x);
  }
  if (!std::isfinite(hi)) out.push_back(std::numeric_limits<double>::infinity());
  return out;
}

// Breakpoints on [0, inf) for a transverse radius: the given length scales plus geometric fill.
inline std::vector<double> radial_breaks(std::vector<double> scales) {
  std::sort(scales.begin(), scales.end());
  std::vector<double> out{0.0};
  for (double s : scales) {
    if (!(s > 0)) continue;
    while (out.back() > 0 && s / out.back() > 8.0) out.push_back(out.back() * 8.0);
    if (s > out.back() * (1 + 1e-12)) out.push_back(s);
  }
  out.push_back(std::numeric_limits<double>::infinity());
  return out;
}

// Integral over R^N of f(t, rho) where t is the coordinate along an axis and rho the distance
// to it; transverse measure |S^{N-2}| rho^{N-2} d rho.
template <class F>
QuadResult integrate_axisymmetric(int N, F&& f, const std::vector<double>& peaks, double width,
                                  const QuadratureSpec& spec, Tails tails = Tails::fast) {
  spec.validate();
  const double area = sphere_area(N - 2);
  const QuadratureSpec inner = spec.inner();
  auto slice = [&](double t) {
    std::vector<double> scales;
    for (double p : peaks) scales.push_back(std::hypot(width, t - p));
    const auto br = radial_breaks(scales);
    return integrate_panels([&](double rho) { return f(t, rho) * std::pow(rho, N - 2); }, br, inner, false, tails).value;
  };
  const auto br = graded_breaks(peaks, width, -std::numeric_limits<double>::infinity(),
                                std::numeric_limits<double>::infinity());
  QuadResult res = integrate_panels(slice, br, spec, true, tails);
  res.value *= area;
  res.error *= area;
  res.l1 *= area;
  return res;
}

// Radial integral over R^N of f(rho): |S^{N-1}| int rho^{N-1} f.
template <class F>
QuadResult integrate_radial(int N, F&& f, double width, const QuadratureSpec& spec) {
  spec.validate();
  const double area = sphere_area(N - 1);
  const auto br = radial_breaks({width, 64.0 * width});
  QuadResult res = integrate_panels([&](double rho) { return f(rho) * std::pow(rho, N - 1); }, br, spec);
  res.value *= area;
  res.error *= area;
  res.l1 *= area;
  return res;
}

}  // namespace dtower
