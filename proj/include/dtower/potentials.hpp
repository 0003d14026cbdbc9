#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <math.h>  // pchip in Boost 1.74 calls isnan unqualified

#include <boost/math/interpolators/pchip.hpp>

#include "dtower/geometry.hpp"

namespace dtower {

struct RadiusRange {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
};

class RadialPotential {
 public:
  virtual ~RadialPotential() = default;
  virtual double value(double s) const = 0;
  virtual double derivative(double s) const = 0;
  virtual double upper_bound() const = 0;
  virtual RadiusRange declared_range() const { return {}; }
  virtual std::string family() const = 0;

  double operator()(double s) const { return value(s); }
};

class ConstantPotential final : public RadialPotential {
 public:
  explicit ConstantPotential(double c) : c_(c) {
    if (!(c >= 0)) throw domain_error("constant potential must be nonnegative");
  }
  double value(double) const override { return c_; }
  double derivative(double) const override { return 0.0; }
  double upper_bound() const override { return c_; }
  std::string family() const override { return "const"; }

 private:
  double c_;
};

// V(s) = (-4 lambda - N(N-2)) / (1 + s^2)^2
class BrezisNirenbergPotential final : public RadialPotential {
 public:
  BrezisNirenbergPotential(double lambda, int N) : lambda_(lambda), N_(N) {
    Dimension{N};
    if (!(lambda < -0.25 * N * (N - 2)))
      throw domain_error("bn potential needs lambda < -N(N-2)/4");
    amp_ = -4.0 * lambda - double(N) * (N - 2);
  }
  double value(double s) const override {
    const double q = 1.0 + s * s;
    return amp_ / (q * q);
  }
  double derivative(double s) const override {
    const double q = 1.0 + s * s;
    return -4.0 * amp_ * s / (q * q * q);
  }
  double upper_bound() const override { return amp_; }
  std::string family() const override { return "bn"; }
  double lambda() const { return lambda_; }
  int dim() const { return N_; }

 private:
  double lambda_;
  int N_;
  double amp_;
};

// V(s) = a + b exp(-(s-c)^2 / w^2); b < 0 is admitted when a + b > 0.
class BumpPotential final : public RadialPotential {
 public:
  BumpPotential(double a, double b, double c, double w) : a_(a), b_(b), c_(c), w_(w) {
    if (!(a >= 0)) throw domain_error("bump base a must be nonnegative");
    if (b == 0 || !std::isfinite(b)) throw domain_error("bump amplitude b must be nonzero");
    if (b < 0 && !(a + b > 0)) throw domain_error("bump with negative amplitude needs a + b > 0");
    if (!(c > 0)) throw domain_error("bump center c must be positive");
    if (!(w > 0)) throw domain_error("bump width w must be positive");
  }
  double value(double s) const override {
    const double z = (s - c_) / w_;
    return a_ + b_ * std::exp(-z * z);
  }
  double derivative(double s) const override {
    const double z = (s - c_) / w_;
    return -2.0 * b_ * z / w_ * std::exp(-z * z);
  }
  double upper_bound() const override { return a_ + std::max(b_, 0.0); }
  std::string family() const override { return "bump"; }

 private:
  double a_, b_, c_, w_;
};

// Monotone cubic (PCHIP) through sorted samples; held constant outside the sampled range.
class TablePotential final : public RadialPotential {
 public:
  TablePotential(std::vector<double> s, std::vector<double> v) {
    if (s.size() != v.size() || s.size() < 4) throw domain_error("table needs at least 4 (s, V) samples");
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!(v[i] >= 0)) throw domain_error("table values must be nonnegative");
      if (i > 0 && !(s[i] > s[i - 1])) throw domain_error("table radii must be strictly increasing");
    }
    if (s.front() < 0) throw domain_error("table radii must be nonnegative");
    lo_ = s.front();
    hi_ = s.back();
    vlo_ = v.front();
    vhi_ = v.back();
    sup_ = *std::max_element(v.begin(), v.end());
    interp_ = std::make_shared<Interp>(std::move(s), std::move(v));
  }
  double value(double s) const override {
    if (s <= lo_) return vlo_;
    if (s >= hi_) return vhi_;
    return (*interp_)(s);
  }
  double derivative(double s) const override {
    if (s <= lo_ || s >= hi_) return 0.0;
    return interp_->prime(s);
  }
  // PCHIP never overshoots the data, so the sample maximum bounds V.
  double upper_bound() const override { return sup_; }
  RadiusRange declared_range() const override { return {lo_, hi_}; }
  std::string family() const override { return "table"; }

 private:
  using Interp = boost::math::interpolators::pchip<std::vector<double>>;
  std::shared_ptr<Interp> interp_;
  double lo_, hi_, vlo_, vhi_, sup_;
};

struct PotentialSpec {
  std::string family;
  std::map<std::string, double> params;
  std::vector<double> table_s;
  std::vector<double> table_v;
};

using PotentialPtr = std::shared_ptr<const RadialPotential>;

inline double require_param(const PotentialSpec& spec, const std::string& key) {
  auto it = spec.params.find(key);
  if (it == spec.params.end()) throw domain_error("potential." + key + " is required for family " + spec.family);
  return it->second;
}

inline PotentialPtr make_potential(const PotentialSpec& spec) {
  static const std::map<std::string, std::vector<std::string>> allowed = {
      {"bn", {"lambda", "N"}}, {"bump", {"a", "b", "c", "w"}}, {"table", {}}, {"const", {"value"}}};
  if (auto fam = allowed.find(spec.family); fam != allowed.end())
    for (const auto& [key, value] : spec.params)
      if (std::find(fam->second.begin(), fam->second.end(), key) == fam->second.end())
        throw domain_error("potential." + key + " is not a parameter of family " + spec.family);
  if (spec.family == "bn")
    return std::make_shared<BrezisNirenbergPotential>(require_param(spec, "lambda"),
                                                      int(require_param(spec, "N")));
  if (spec.family == "bump") {
    auto get = [&](const char* k, double dflt) {
      auto it = spec.params.find(k);
      return it == spec.params.end() ? dflt : it->second;
    };
    return std::make_shared<BumpPotential>(get("a", 0.0), require_param(spec, "b"), require_param(spec, "c"),
                                           require_param(spec, "w"));
  }
  if (spec.family == "table") return std::make_shared<TablePotential>(spec.table_s, spec.table_v);
  if (spec.family == "const") return std::make_shared<ConstantPotential>(require_param(spec, "value"));
  throw domain_error("unknown potential family '" + spec.family + "'");
}

// Bump with r0 = 1 a maximum of s^2 V and V(1) = 1: requires c = 1 - w^2, b = exp(w^2).
inline PotentialPtr unit_max_bump(double w = 0.5) {
  return std::make_shared<BumpPotential>(0.0, std::exp(w * w), 1.0 - w * w, w);
}

// Bump with r0 = 1 a minimum of s^2 V and V(1) = 1 (dip of depth one below the base a).
inline PotentialPtr unit_min_bump(double a = 2.0, double w = 0.2) {
  return std::make_shared<BumpPotential>(a, -(a - 1.0) * std::exp(w * w / ((a - 1.0) * (a - 1.0))),
                                         1.0 + w * w / (a - 1.0), w);
}

enum class CriticalKind { max, min };

struct PotentialCriticalPoint {
  double r0;
  CriticalKind kind;
  double value;
  int curvature_sign;  // sign of (s^2 V)'' at r0
};

inline double r2v_slope(const RadialPotential& V, double s) { return 2.0 * s * V.value(s) + s * s * V.derivative(s); }

inline std::vector<PotentialCriticalPoint> r2v_critical(const RadialPotential& V, double lo, double hi, double tol,
                                                        int grid = 4096) {
  if (!(tol > 0)) throw domain_error("tol must be positive");
  if (!(hi > lo) || !(lo >= 0)) throw domain_error("bracket must satisfy 0 <= lo < hi");
  const auto range = V.declared_range();
  if (lo < range.lo || hi > range.hi) throw domain_error("bracket outside the potential's declared range");

  std::vector<PotentialCriticalPoint> out;
  const double ds = (hi - lo) / grid;
  double a = lo, ga = r2v_slope(V, a);
  for (int i = 1; i <= grid; ++i) {
    const double b = lo + i * ds;
    const double gb = r2v_slope(V, b);
    if (ga == 0.0 || (ga > 0) == (gb > 0)) {
      a = b;
      ga = gb;
      continue;
    }
    double x0 = a, x1 = b, g0 = ga, g1 = gb;
    while (x1 - x0 > tol) {
      const double m = 0.5 * (x0 + x1);
      const double gm = r2v_slope(V, m);
      if ((gm > 0) == (g0 > 0)) {
        x0 = m;
        g0 = gm;
      } else {
        x1 = m;
        g1 = gm;
      }
    }
    double root = 0.5 * (x0 + x1);
    if (g1 != g0) {
      const double sec = x0 - g0 * (x1 - x0) / (g1 - g0);
      if (sec >= x0 && sec <= x1) root = sec;
    }
    const double v = V.value(root);
    if (v > 0) {
      const CriticalKind kind = ga > 0 ? CriticalKind::max : CriticalKind::min;
      out.push_back({root, kind, v, kind == CriticalKind::max ? -1 : 1});
    }
    a = b;
    ga = gb;
  }
  return out;
}

}  // namespace dtower
