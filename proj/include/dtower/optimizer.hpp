#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "dtower/potentials.hpp"
#include "dtower/reduced_energy.hpp"

namespace dtower {

template <std::size_t D>
using Vec = std::array<double, D>;

template <std::size_t D>
struct BoxMinimum {
  Vec<D> x{};
  double value = 0.0;
  double grad_norm = 0.0;  // infinity norm of the projected gradient
  int iterations = 0;
  bool converged = false;
  std::array<int, D> active{};  // -1 lower bound, +1 upper bound, 0 free
};

namespace detail {

template <std::size_t D>
Vec<D> clamp(Vec<D> x, const Vec<D>& lo, const Vec<D>& hi) {
  for (std::size_t i = 0; i < D; ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
  return x;
}

template <std::size_t D>
Vec<D> projected_gradient(const Vec<D>& x, const Vec<D>& g, const Vec<D>& lo, const Vec<D>& hi,
                          std::array<int, D>* active = nullptr) {
  Vec<D> pg = g;
  for (std::size_t i = 0; i < D; ++i) {
    int a = 0;
    if (x[i] <= lo[i] && g[i] > 0) a = -1;
    if (x[i] >= hi[i] && g[i] < 0) a = 1;
    if (a != 0) pg[i] = 0.0;
    if (active) (*active)[i] = a;
  }
  return pg;
}

template <std::size_t D>
double inf_norm(const Vec<D>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Solve the D x D system J dx = -g by Gaussian elimination with partial pivoting.
template <std::size_t D>
bool newton_step(std::array<Vec<D>, D> J, Vec<D> g, Vec<D>& dx) {
  for (std::size_t c = 0; c < D; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < D; ++r)
      if (std::abs(J[r][c]) > std::abs(J[p][c])) p = r;
    if (J[p][c] == 0.0) return false;
    std::swap(J[p], J[c]);
    std::swap(g[p], g[c]);
    for (std::size_t r = c + 1; r < D; ++r) {
      const double f = J[r][c] / J[c][c];
      for (std::size_t q = c; q < D; ++q) J[r][q] -= f * J[c][q];
      g[r] -= f * g[c];
    }
  }
  for (std::size_t c = D; c-- > 0;) {
    double s = -g[c];
    for (std::size_t q = c + 1; q < D; ++q) s -= J[c][q] * dx[q];
    dx[c] = s / J[c][c];
  }
  return true;
}

}  // namespace detail

// Newton iterations on grad = 0 with a central-difference Jacobian; stops when a step would leave
// the box or fails to shrink the gradient.
template <std::size_t D, class G>
Vec<D> newton_polish(G&& grad, Vec<D> x, const Vec<D>& lo, const Vec<D>& hi, int max_steps = 8) {
  Vec<D> g = grad(x);
  for (int step = 0; step < max_steps && detail::inf_norm(g) > 0; ++step) {
    std::array<Vec<D>, D> J{};
    for (std::size_t j = 0; j < D; ++j) {
      const double h = 1e-5 * std::max(1.0, std::abs(x[j]));
      Vec<D> xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      const Vec<D> gp = grad(xp), gm = grad(xm);
      for (std::size_t i = 0; i < D; ++i) J[i][j] = (gp[i] - gm[i]) / (2.0 * h);
    }
    Vec<D> dx{};
    if (!detail::newton_step(J, g, dx)) break;
    Vec<D> xn{};
    bool inside = true;
    for (std::size_t i = 0; i < D; ++i) {
      xn[i] = x[i] + dx[i];
      inside = inside && xn[i] >= lo[i] && xn[i] <= hi[i];
    }
    if (!inside) break;
    const Vec<D> gn = grad(xn);
    if (!(detail::inf_norm(gn) < detail::inf_norm(g))) break;
    x = xn;
    g = gn;
  }
  return x;
}

// Projected BFGS on a box; f and grad take Vec<D>. Ends with Newton polishing on the gradient
// (Jacobian by central differences of the analytic gradient) when the minimizer is interior.
template <std::size_t D, class F, class G>
BoxMinimum<D> minimize_in_box(F&& f, G&& grad, Vec<D> x, const Vec<D>& lo, const Vec<D>& hi, double tol = 1e-10,
                              int max_iter = 500) {
  x = detail::clamp(x, lo, hi);
  std::array<Vec<D>, D> H{};
  auto reset = [&] {
    for (std::size_t i = 0; i < D; ++i)
      for (std::size_t j = 0; j < D; ++j) H[i][j] = i == j ? 1.0 : 0.0;
  };
  reset();
  BoxMinimum<D> out;
  double fx = f(x);
  Vec<D> g = grad(x);
  std::array<int, D> active{};
  Vec<D> pg = detail::projected_gradient(x, g, lo, hi, &active);
  bool first = true;
  int it = 0;
  for (; it < max_iter && detail::inf_norm(pg) >= tol; ++it) {
    Vec<D> d{};
    for (std::size_t i = 0; i < D; ++i) {
      if (active[i] != 0) continue;
      for (std::size_t j = 0; j < D; ++j)
        if (active[j] == 0) d[i] -= H[i][j] * g[j];
    }
    double slope = 0.0;
    for (std::size_t i = 0; i < D; ++i) slope += d[i] * g[i];
    if (!(slope < 0)) {
      reset();
      for (std::size_t i = 0; i < D; ++i) d[i] = -pg[i];
    }
    if (first) {
      // keep the first trial step inside a fraction of the box
      double span = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < D; ++i) span = std::min(span, hi[i] - lo[i]);
      const double n = detail::inf_norm(d);
      if (n > 0.25 * span)
        for (auto& v : d) v *= 0.25 * span / n;
      first = false;
    }
    double alpha = 1.0;
    Vec<D> xn{};
    double fn = fx;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < D; ++i) xn[i] = x[i] + alpha * d[i];
      xn = detail::clamp(xn, lo, hi);
      fn = f(xn);
      double dec = 0.0;
      for (std::size_t i = 0; i < D; ++i) dec += g[i] * (xn[i] - x[i]);
      if (!(dec < 0)) break;  // the step no longer moves x
      if (fn <= fx + 1e-4 * dec) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      // function differences are below rounding; accept a unit step if the gradient shrinks
      for (std::size_t i = 0; i < D; ++i) xn[i] = x[i] + d[i];
      xn = detail::clamp(xn, lo, hi);
      const Vec<D> gn = grad(xn);
      if (detail::inf_norm(detail::projected_gradient(xn, gn, lo, hi)) >= detail::inf_norm(pg)) break;
      fn = f(xn);
    }
    const Vec<D> gn = grad(xn);
    Vec<D> s{}, y{};
    double sy = 0.0, ss = 0.0, yy = 0.0;
    for (std::size_t i = 0; i < D; ++i) {
      s[i] = xn[i] - x[i];
      y[i] = gn[i] - g[i];
      sy += s[i] * y[i];
      ss += s[i] * s[i];
      yy += y[i] * y[i];
    }
    std::array<int, D> active_new{};
    const Vec<D> pgn = detail::projected_gradient(xn, gn, lo, hi, &active_new);
    if (active_new != active) {
      reset();
    } else if (sy > 1e-12 * std::sqrt(ss * yy)) {
      // inverse BFGS update
      Vec<D> Hy{};
      for (std::size_t i = 0; i < D; ++i)
        for (std::size_t j = 0; j < D; ++j) Hy[i] += H[i][j] * y[j];
      double yHy = 0.0;
      for (std::size_t i = 0; i < D; ++i) yHy += y[i] * Hy[i];
      const double rho = 1.0 / sy;
      for (std::size_t i = 0; i < D; ++i)
        for (std::size_t j = 0; j < D; ++j)
          H[i][j] += (1.0 + yHy * rho) * rho * s[i] * s[j] - rho * (Hy[i] * s[j] + s[i] * Hy[j]);
    }
    x = xn;
    fx = fn;
    g = gn;
    pg = pgn;
    active = active_new;
  }

  bool interior = true;
  for (int a : active) interior = interior && a == 0;
  if (interior) {
    x = newton_polish<D>(grad, x, lo, hi);
    g = grad(x);
    fx = f(x);
    pg = detail::projected_gradient(x, g, lo, hi, &active);
  }
  out.x = x;
  out.value = fx;
  out.grad_norm = detail::inf_norm(pg);
  out.iterations = it;
  out.converged = out.grad_norm < tol;
  out.active = active;
  return out;
}

class BoundaryExtremum : public std::runtime_error {
 public:
  BoundaryExtremum(Face face, std::array<double, 3> z)
      : std::runtime_error("boundary extremum on face " + to_string(face)), face_(face), z_(z) {}
  Face face() const { return face_; }
  const std::array<double, 3>& where() const { return z_; }

 private:
  Face face_;
  std::array<double, 3> z_;
};

enum class SolveMode { max, minmax };

struct CriticalPoint {
  double r_star = 0.0;
  double h_star = 0.0;
  double mu_star = 0.0;
  std::array<double, 3> scaled{};  // (r, h k^{(N-3)/(N-1)}, mu k^{-(N-2)/(N-4)})
  double F = 0.0;
  double objective = 0.0;  // normalized energy gain, see ScaledObjective
  double grad_norm = 0.0;  // of the normalized objective in scaled variables
  bool converged = false;
  std::array<double, 6> margins{};  // distance to each face in scaled units, Face order
  double h_residual = 0.0;          // |h k^{(N-3)/(N-1)} - h0|
  double mu_residual = 0.0;         // |mu k^{-(N-2)/(N-4)} - mu0|
  double h_rel_residual = 0.0;
  double mu_rel_residual = 0.0;
  int iterations = 0;
  double seconds = 0.0;
};

namespace detail {

inline Face face_of(int axis, int side) { return Face(2 * axis + (side > 0 ? 1 : 0)); }

inline CriticalPoint finish_point(const ScaledObjective& obj, const ParameterBox& box, const std::array<double, 3>& z,
                                  double grad_norm, bool converged, int iterations) {
  CriticalPoint cp;
  const auto x = obj.to_raw(z);
  cp.r_star = x[0];
  cp.h_star = x[1];
  cp.mu_star = x[2];
  cp.scaled = z;
  cp.F = F_main(obj.N, obj.k, x[0], x[1], x[2], *obj.V).F;
  cp.objective = obj.value(z);
  cp.grad_norm = grad_norm;
  cp.converged = converged;
  for (std::size_t i = 0; i < 3; ++i) {
    cp.margins[2 * i] = z[i] - box.lo[i];
    cp.margins[2 * i + 1] = box.hi[i] - z[i];
  }
  cp.h_residual = std::abs(z[1] - box.h0);
  cp.mu_residual = std::abs(z[2] - box.mu0);
  cp.h_rel_residual = cp.h_residual / box.h0;
  cp.mu_rel_residual = cp.mu_residual / box.mu0;
  cp.iterations = iterations;
  return cp;
}

}  // namespace detail

// Critical point of the main term inside the box. max: maximize F. minmax: for each r maximize over
// (h, mu), then minimize the result over r.
inline CriticalPoint solve_critical(int N, int k, const RadialPotential& V, double r0, const ParameterBox& box,
                                    SolveMode mode, double tol = 1e-10) {
  if (box.N != N || box.k != k) throw domain_error("box was built for a different (N, k)");
  if (std::abs(box.r0 - r0) > 1e-12 * std::max(1.0, r0)) throw domain_error("box is not centered at r0");
  const ScaledObjective obj{N, k, &V};
  auto f3 = [&](const Vec<3>& z) { return obj.value(z); };
  auto g3 = [&](const Vec<3>& z) { return obj.gradient(z); };

  auto check_interior = [&](const std::array<int, 3>& active, const Vec<3>& z) {
    for (int i = 0; i < 3; ++i)
      if (active[std::size_t(i)] != 0) throw BoundaryExtremum(detail::face_of(i, active[std::size_t(i)]), z);
  };

  if (mode == SolveMode::max) {
    const auto m = minimize_in_box<3>(f3, g3, box.center(), box.lo, box.hi, tol);
    check_interior(m.active, m.x);
    return detail::finish_point(obj, box, m.x, m.grad_norm, m.converged, m.iterations);
  }

  // inner maximization over (h, mu) at fixed r
  auto inner = [&](double r) {
    auto f2 = [&](const Vec<2>& w) { return obj.value({r, w[0], w[1]}); };
    auto g2 = [&](const Vec<2>& w) {
      const auto g = obj.gradient({r, w[0], w[1]});
      return Vec<2>{g[1], g[2]};
    };
    return minimize_in_box<2>(f2, g2, {box.h0, box.mu0}, {box.lo[1], box.lo[2]}, {box.hi[1], box.hi[2]}, tol);
  };
  // F's max over (h, mu) is -min Phi; minimizing it over r means maximizing min Phi
  const int grid = 41;
  std::vector<double> rs(grid), vals(grid);
  int best = 0;
  for (int i = 0; i < grid; ++i) {
    rs[std::size_t(i)] = box.lo[0] + (box.hi[0] - box.lo[0]) * i / (grid - 1);
    const auto m = inner(rs[std::size_t(i)]);
    check_interior({0, m.active[0], m.active[1]}, {rs[std::size_t(i)], m.x[0], m.x[1]});
    vals[std::size_t(i)] = m.value;
    if (vals[std::size_t(i)] > vals[std::size_t(best)]) best = i;
  }
  if (best == 0 || best == grid - 1) {
    const auto m = inner(rs[std::size_t(best)]);
    throw BoundaryExtremum(best == 0 ? Face::r_lo : Face::r_hi, {rs[std::size_t(best)], m.x[0], m.x[1]});
  }
  const auto res = boost::math::tools::brent_find_minima([&](double r) { return -inner(r).value; },
                                                         rs[std::size_t(best - 1)], rs[std::size_t(best + 1)], 40);
  const auto m = inner(res.first);
  Vec<3> z{res.first, m.x[0], m.x[1]};
  // the saddle is a zero of the full gradient
  z = newton_polish<3>(g3, z, box.lo, box.hi);
  const double gn = detail::inf_norm(obj.gradient(z));
  return detail::finish_point(obj, box, z, gn, gn < tol, m.iterations);
}

}  // namespace dtower
