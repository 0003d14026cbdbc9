#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dtower {

class domain_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using Point = std::vector<double>;

// x^(m/2) for integer m >= 0, x > 0.
inline double half_integer_power(double x, int twice_exponent) {
  double p = 1.0;
  double base = x;
  for (int n = twice_exponent / 2; n > 0; n >>= 1) {
    if (n & 1) p *= base;
    base *= base;
  }
  return (twice_exponent & 1) ? p * std::sqrt(x) : p;
}

struct Dimension {
  int N;

  explicit Dimension(int n) : N(n) {
    if (n < 5) throw domain_error("N must be at least 5, got " + std::to_string(n));
  }
  double critical_exponent() const { return 2.0 * N / (N - 2); }
  double normalization() const { return std::pow(double(N) * (N - 2), 0.25 * (N - 2)); }
};

// U_{x,mu}(y) = C_N (mu / (1 + mu^2 |y-x|^2))^{(N-2)/2} as a function of |y-x|^2.
class BubbleProfile {
 public:
  explicit BubbleProfile(int N)
      : N_(N), cn_(std::pow(double(N) * (N - 2), 0.25 * (N - 2))), p_(2.0 * N / (N - 2) - 1.0),
        cn_p_(std::pow(cn_, p_)) {}

  int dim() const { return N_; }
  double normalization() const { return cn_; }
  double power() const { return p_; }  // 2* - 1

  double value(double mu, double dist2) const {
    return cn_ * half_integer_power(mu / (1.0 + mu * mu * dist2), N_ - 2);
  }
  // U^{2*-1}
  double power_value(double mu, double dist2) const {
    return cn_p_ * half_integer_power(mu / (1.0 + mu * mu * dist2), N_ + 2);
  }
  // d/d(y_i) U = radial_factor * (y_i - x_i)
  double radial_factor(double mu, double dist2) const {
    const double q = 1.0 + mu * mu * dist2;
    return -(N_ - 2) * mu * mu * value(mu, dist2) / q;
  }
  double laplacian(double mu, double dist2) const {
    const double q = 1.0 + mu * mu * dist2;
    return -double(N_) * (N_ - 2) * mu * mu * cn_ * half_integer_power(mu, N_ - 2) *
           half_integer_power(1.0 / q, N_ + 2);
  }
  double mu_derivative(double mu, double dist2) const {
    const double t = mu * mu * dist2;
    return 0.5 * (N_ - 2) * value(mu, dist2) * (1.0 - t) / ((1.0 + t) * mu);
  }

 private:
  int N_;
  double cn_;
  double p_;
  double cn_p_;
};

inline double dist2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

struct BubbleEval {
  double value;
  Point gradient;
};

inline void require_same_size(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw domain_error("point dimension mismatch");
  if (x.size() < 5) throw domain_error("points must live in R^N with N >= 5");
}

inline double bubble_value(std::span<const double> x, double mu, std::span<const double> y) {
  require_same_size(x, y);
  return BubbleProfile(int(x.size())).value(mu, dist2(x, y));
}

inline BubbleEval bubble_eval(std::span<const double> x, double mu, std::span<const double> y) {
  require_same_size(x, y);
  if (!(mu > 0)) throw domain_error("mu must be positive");
  const BubbleProfile u(int(x.size()));
  const double d2 = dist2(x, y);
  BubbleEval out{u.value(mu, d2), Point(x.size())};
  const double g = u.radial_factor(mu, d2);
  for (std::size_t i = 0; i < x.size(); ++i) out.gradient[i] = g * (y[i] - x[i]);
  return out;
}

inline double bubble_laplacian(std::span<const double> x, double mu, std::span<const double> y) {
  require_same_size(x, y);
  return BubbleProfile(int(x.size())).laplacian(mu, dist2(x, y));
}

struct Configuration {
  int N = 5;
  int k = 2;
  double r = 1.0;
  double h = 0.0;
  double mu = 1.0;

  void validate() const {
    Dimension{N};
    if (k < 2) throw domain_error("k must be at least 2");
    if (!(r > 0)) throw domain_error("r must be positive");
    if (!(h >= 0 && h < 1)) throw domain_error("h must lie in [0,1)");
    if (!(mu > 0)) throw domain_error("mu must be positive");
  }
  double s() const { return std::sqrt(1.0 - h * h); }
};

enum class Ring { upper, lower };

struct CenterSet {
  int N = 0;
  int k = 0;
  std::vector<double> coords;  // upper ring j=1..k, then lower ring j=1..k

  std::size_t size() const { return N > 0 ? coords.size() / std::size_t(N) : 0; }
  std::span<const double> operator[](std::size_t idx) const {
    return {coords.data() + idx * std::size_t(N), std::size_t(N)};
  }
  std::span<const double> center(Ring ring, int j) const {
    return (*this)[std::size_t((ring == Ring::upper ? 0 : k) + j - 1)];
  }
};

inline CenterSet make_centers(const Configuration& cfg) {
  cfg.validate();
  CenterSet c{cfg.N, cfg.k, std::vector<double>(std::size_t(2 * cfg.k * cfg.N), 0.0)};
  const double s = cfg.s();
  for (int ring = 0; ring < 2; ++ring) {
    for (int j = 1; j <= cfg.k; ++j) {
      const double theta = 2.0 * (j - 1) * std::numbers::pi / cfg.k;
      double* x = c.coords.data() + std::size_t((ring * cfg.k + j - 1) * cfg.N);
      x[0] = cfg.r * s * std::cos(theta);
      x[1] = cfg.r * s * std::sin(theta);
      x[2] = (ring == 0 ? 1.0 : -1.0) * cfg.r * cfg.h;
    }
  }
  return c;
}

struct RingDistances {
  std::optional<double> same_ring;  // empty for j = 1
  double cross_ring;
};

inline RingDistances ring_distances(const Configuration& cfg, int j) {
  cfg.validate();
  if (j < 1 || j > cfg.k) throw domain_error("ring index out of range");
  const double sn = std::sin((j - 1) * std::numbers::pi / cfg.k);
  RingDistances d;
  if (j >= 2) d.same_ring = 2.0 * cfg.r * cfg.s() * sn;
  d.cross_ring = 2.0 * cfg.r * std::sqrt((1.0 - cfg.h * cfg.h) * sn * sn + cfg.h * cfg.h);
  return d;
}

// Half the smaller of the nearest same-ring and cross-ring separations.
inline double min_half_separation(const Configuration& cfg) {
  const double same = 2.0 * cfg.r * cfg.s() * std::sin(std::numbers::pi / cfg.k);
  return 0.5 * std::min(same, 2.0 * cfg.r * cfg.h);
}

struct AnsatzValue {
  double W;
  double sum_powers;
};

class Ansatz {
 public:
  explicit Ansatz(const Configuration& cfg) : cfg_(cfg), centers_(make_centers(cfg)), u_(cfg.N) {}
  Ansatz(CenterSet centers, double mu) : centers_(std::move(centers)), u_(centers_.N) {
    cfg_.N = centers_.N;
    cfg_.k = centers_.k;
    cfg_.mu = mu;
  }

  const Configuration& config() const { return cfg_; }
  const CenterSet& centers() const { return centers_; }
  const BubbleProfile& profile() const { return u_; }

  AnsatzValue eval(std::span<const double> y) const {
    if (y.size() != std::size_t(cfg_.N)) throw domain_error("point dimension mismatch");
    AnsatzValue out{0.0, 0.0};
    for (std::size_t i = 0; i < centers_.size(); ++i) {
      const double u = u_.value(cfg_.mu, dist2(centers_[i], y));
      out.W += u;
      out.sum_powers += std::pow(u, u_.power());
    }
    return out;
  }
  double W(std::span<const double> y) const { return eval(y).W; }

 private:
  Configuration cfg_;
  CenterSet centers_;
  BubbleProfile u_;
};

inline AnsatzValue ansatz_eval(const Configuration& cfg, std::span<const double> y) {
  return Ansatz(cfg).eval(y);
}

// Kernel of the linearized operator at U_{0,1}: Z_i = dU/dy_i (i <= N), Z_{N+1} = (N-2)/2 U + y.grad U.
inline double kernel_Z(int i, std::span<const double> y) {
  const int N = int(y.size());
  if (N < 5) throw domain_error("points must live in R^N with N >= 5");
  if (i < 1 || i > N + 1) throw domain_error("kernel index out of range");
  const BubbleProfile u(N);
  double r2 = 0.0;
  for (double v : y) r2 += v * v;
  if (i <= N) return u.radial_factor(1.0, r2) * y[std::size_t(i - 1)];
  return 0.5 * (N - 2) * u.value(1.0, r2) + u.radial_factor(1.0, r2) * r2;
}

struct ParamDerivField {
  int ell;  // 1: d/dr, 2: d/dh, 3: d/dmu
  Ring ring;
  int j;
};

inline double param_derivative_eval(const ParamDerivField& field, const Configuration& cfg,
                                    std::span<const double> y) {
  cfg.validate();
  if (field.ell < 1 || field.ell > 3) throw domain_error("parameter index must be 1, 2 or 3");
  if (field.j < 1 || field.j > cfg.k) throw domain_error("ring index out of range");
  if (y.size() != std::size_t(cfg.N)) throw domain_error("point dimension mismatch");
  const BubbleProfile u(cfg.N);
  const CenterSet c = make_centers(cfg);
  const auto x = c.center(field.ring, field.j);
  const double d2 = dist2(x, y);
  if (field.ell == 3) return u.mu_derivative(cfg.mu, d2);

  // dU/dx_i = -radial_factor * (y_i - x_i)
  const double g = -u.radial_factor(cfg.mu, d2);
  Point dx(std::size_t(cfg.N), 0.0);
  if (field.ell == 1) {
    for (int i = 0; i < cfg.N; ++i) dx[std::size_t(i)] = x[std::size_t(i)] / cfg.r;
  } else {
    const double theta = 2.0 * (field.j - 1) * std::numbers::pi / cfg.k;
    const double t = cfg.r * cfg.h / cfg.s();
    dx[0] = -t * std::cos(theta);
    dx[1] = -t * std::sin(theta);
    dx[2] = (field.ring == Ring::upper ? 1.0 : -1.0) * cfg.r;
  }
  double out = 0.0;
  for (int i = 0; i < cfg.N; ++i) out += g * (y[std::size_t(i)] - x[std::size_t(i)]) * dx[std::size_t(i)];
  return out;
}

struct Cell {
  int j;
  int sign;  // +1 or -1
  bool operator==(const Cell&) const = default;
};

inline Cell cell_index(const Configuration& cfg, std::span<const double> y) {
  cfg.validate();
  if (y.size() != std::size_t(cfg.N)) throw domain_error("point dimension mismatch");
  double phi = std::atan2(y[1], y[0]);
  if (phi < 0) phi += 2.0 * std::numbers::pi;
  const double u = phi * cfg.k / (2.0 * std::numbers::pi) + 0.5;
  int s = int(std::ceil(u)) - 1;
  if (s < 0) s = 0;
  if (s >= cfg.k) s = 0;
  if (s == cfg.k - 1 && u == double(cfg.k)) s = 0;  // boundary between j=k and j=1
  return {s + 1, y[2] >= 0 ? 1 : -1};
}

enum class SymmetryGenerator { rotation, reflect_y2, reflect_y3, reflect_trailing };

inline Point apply_generator(SymmetryGenerator g, std::span<const double> y, int k, int axis = 3) {
  Point out(y.begin(), y.end());
  switch (g) {
    case SymmetryGenerator::rotation: {
      const double a = 2.0 * std::numbers::pi / k;
      out[0] = std::cos(a) * y[0] - std::sin(a) * y[1];
      out[1] = std::sin(a) * y[0] + std::cos(a) * y[1];
      break;
    }
    case SymmetryGenerator::reflect_y2: out[1] = -y[1]; break;
    case SymmetryGenerator::reflect_y3: out[2] = -y[2]; break;
    case SymmetryGenerator::reflect_trailing: out[std::size_t(axis)] = -y[std::size_t(axis)]; break;
  }
  return out;
}

// Random probe points concentrated around the centers plus a broad component.
inline Point symmetry_probe(const CenterSet& c, double mu, double r, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  std::uniform_int_distribution<std::size_t> pick(0, c.size() - 1);
  std::uniform_real_distribution<double> unit;
  Point y(std::size_t(c.N));
  if (unit(rng) < 0.5) {
    const auto x = c[pick(rng)];
    const double scale = std::pow(10.0, 2.0 * unit(rng)) / mu;
    for (int i = 0; i < c.N; ++i) y[std::size_t(i)] = x[std::size_t(i)] + scale * gauss(rng);
  } else {
    for (int i = 0; i < c.N; ++i) y[std::size_t(i)] = r * gauss(rng);
  }
  return y;
}

// Max relative deviation |W(y) - W(g y)| / |W(y)| over sampled y and all generators.
inline double symmetry_deviation(const Ansatz& w, double r, int samples, std::uint64_t seed) {
  if (samples < 1) throw domain_error("samples must be at least 1");
  std::mt19937_64 rng(seed);
  const auto& c = w.centers();
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Point y = symmetry_probe(c, w.config().mu, r, rng);
    const double base = w.W(y);
    auto check = [&](const Point& gy) { worst = std::max(worst, std::abs(base - w.W(gy)) / std::abs(base)); };
    check(apply_generator(SymmetryGenerator::rotation, y, c.k));
    check(apply_generator(SymmetryGenerator::reflect_y2, y, c.k));
    check(apply_generator(SymmetryGenerator::reflect_y3, y, c.k));
    for (int axis = 3; axis < c.N; ++axis) check(apply_generator(SymmetryGenerator::reflect_trailing, y, c.k, axis));
  }
  return worst;
}

inline double symmetry_check(const Configuration& cfg, int samples, std::uint64_t seed) {
  return symmetry_deviation(Ansatz(cfg), cfg.r, samples, seed);
}

}  // namespace dtower
