#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "dtower/constants.hpp"
#include "dtower/geometry.hpp"
#include "dtower/potentials.hpp"
#include "dtower/quadrature.hpp"
#include "dtower/sampling.hpp"

namespace dtower {

struct PairIntegrals {
  double int_pow = 0.0;   // int U1^{2*-1} U2
  double int_l2 = 0.0;    // int U1 U2
  double int_grad = 0.0;  // int grad U1 . grad U2
  double err_pow = 0.0;
  double err_l2 = 0.0;
  double err_grad = 0.0;
};

namespace detail {

inline double distance(std::span<const double> a, std::span<const double> b) { return std::sqrt(dist2(a, b)); }

inline double norm(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

}  // namespace detail

// Two-bubble integrals, reduced to (axial coordinate, transverse radius) about the line x1 x2.
inline PairIntegrals pair_interaction(std::span<const double> x1, std::span<const double> x2, double mu,
                                      const QuadratureSpec& spec) {
  require_same_size(x1, x2);
  if (!(mu > 0)) throw domain_error("mu must be positive");
  spec.validate();
  const int N = int(x1.size());
  const BubbleProfile u(N);
  const double width = 1.0 / mu;
  const double d = detail::distance(x1, x2);
  PairIntegrals out;

  if (d == 0.0) {
    auto pw = integrate_radial(
        N, [&](double rho) { return u.power_value(mu, rho * rho) * u.value(mu, rho * rho); }, width, spec);
    auto l2 = integrate_radial(
        N,
        [&](double rho) {
          const double v = u.value(mu, rho * rho);
          return v * v;
        },
        width, spec);
    auto gr = integrate_radial(
        N,
        [&](double rho) {
          const double g = u.radial_factor(mu, rho * rho) * rho;
          return g * g;
        },
        width, spec);
    out = {pw.value, l2.value, gr.value, pw.error, l2.error, gr.error};
  } else {
    const std::vector<double> peaks{0.0, d};
    auto pw = integrate_axisymmetric(
        N,
        [&](double t, double rho) {
          const double r2 = rho * rho;
          return u.power_value(mu, t * t + r2) * u.value(mu, (t - d) * (t - d) + r2);
        },
        peaks, width, spec, Tails::algebraic);
    auto l2 = integrate_axisymmetric(
        N,
        [&](double t, double rho) {
          const double r2 = rho * rho;
          return u.value(mu, t * t + r2) * u.value(mu, (t - d) * (t - d) + r2);
        },
        peaks, width, spec, Tails::algebraic);
    auto gr = integrate_axisymmetric(
        N,
        [&](double t, double rho) {
          const double r2 = rho * rho;
          const double g1 = u.radial_factor(mu, t * t + r2);
          const double g2 = u.radial_factor(mu, (t - d) * (t - d) + r2);
          return g1 * g2 * (t * (t - d) + r2);
        },
        peaks, width, spec, Tails::algebraic);
    out = {pw.value, l2.value, gr.value, pw.error, l2.error, gr.error};
  }
  return out;
}

struct PotentialIntegral {
  double value = 0.0;
  double error = 0.0;
};

// int V(|y|) U1 U2 in cylindrical coordinates about the line through x1, x2 (through the origin
// and x1 in the diagonal case). When the origin is off the axis, V is averaged over the angle
// between the transverse direction and the origin's offset, which makes the third variable.
inline PotentialIntegral potential_pair(const RadialPotential& V, std::span<const double> x1,
                                        std::span<const double> x2, double mu, const QuadratureSpec& spec) {
  require_same_size(x1, x2);
  if (!(mu > 0)) throw domain_error("mu must be positive");
  spec.validate();
  const int N = int(x1.size());
  const BubbleProfile u(N);
  const double width = 1.0 / mu;

  std::vector<double> axis(x1.size(), 0.0);
  const double d = detail::distance(x1, x2);
  if (d > 0) {
    for (std::size_t i = 0; i < axis.size(); ++i) axis[i] = (x2[i] - x1[i]) / d;
  } else if (const double n1 = detail::norm(x1); n1 > 0) {
    for (std::size_t i = 0; i < axis.size(); ++i) axis[i] = x1[i] / n1;
  } else {
    axis[0] = 1.0;
  }
  // axial coordinate of x1 measured from the foot of the origin; offset b of the origin from the axis
  double a1 = 0.0;
  for (std::size_t i = 0; i < axis.size(); ++i) a1 += x1[i] * axis[i];
  double b2 = 0.0;
  for (std::size_t i = 0; i < axis.size(); ++i) b2 += (x1[i] - a1 * axis[i]) * (x1[i] - a1 * axis[i]);
  const double scale = std::max({detail::norm(x1), detail::norm(x2), 1.0});
  const double b = std::sqrt(b2) <= 1e-13 * scale ? 0.0 : std::sqrt(b2);
  const double a2 = a1 + d;

  const QuadratureSpec angular = spec.inner();
  const double angle_norm = sphere_area(N - 3) / sphere_area(N - 2);
  auto v_avg = [&](double t, double rho) {
    const double base = t * t + rho * rho + b * b;
    if (b == 0.0 || rho == 0.0) return V.value(std::sqrt(base));
    const double cross = 2.0 * rho * b;
    auto g = [&](double th) {
      const double r2 = std::max(0.0, base - cross * std::cos(th));
      return V.value(std::sqrt(r2)) * half_integer_power(std::sin(th), 2 * (N - 3));
    };
    return angle_norm * integrate_panels(g, {0.0, 0.5 * std::numbers::pi, std::numbers::pi}, angular, false).value;
  };
  const std::vector<double> peaks = d > 0 ? std::vector<double>{a1, a2} : std::vector<double>{a1};
  auto res = integrate_axisymmetric(
      N,
      [&](double t, double rho) {
        const double r2 = rho * rho;
        const double w = u.value(mu, (t - a1) * (t - a1) + r2) * u.value(mu, (t - a2) * (t - a2) + r2);
        return w == 0.0 ? 0.0 : w * v_avg(t, rho);
      },
      peaks, width, spec);
  return {res.value, res.error};
}

enum class MCTarget { W_pow_2star, V_W_sq };

// Monte Carlo over R^N for the ansatz built on arbitrary centers (a single center is allowed).
inline MCResult mc_global(const CenterSet& centers, double mu, const RadialPotential* V, MCTarget target,
                          MCSpec spec) {
  if (centers.size() < 1) throw domain_error("at least one center is required");
  if (!(mu > 0)) throw domain_error("mu must be positive");
  if (target == MCTarget::V_W_sq && V == nullptr) throw domain_error("V_W_sq needs a potential");
  const int N = centers.N;
  Dimension{N};
  if (spec.bubble_dof == 0.0) spec.bubble_dof = target == MCTarget::W_pow_2star ? N : N - 4;
  double bg = spec.background_scale;
  if (!(bg > 0)) {
    bg = 0.0;
    for (std::size_t j = 0; j < centers.size(); ++j) bg = std::max(bg, detail::norm(centers[j]));
    if (!(bg > 0)) bg = 1.0 / mu;
  }
  const MixtureProposal prop(centers, mu, spec.bubble_dof, spec.background_weight, spec.background_dof, bg);
  const BubbleProfile prof(N);
  const double ts = prof.power() + 1.0;
  const std::size_t m = centers.size();
  if (target == MCTarget::W_pow_2star) {
    return mc_integrate(
        prop,
        [&](const double*, const double* d2) {
          double w = 0.0;
          for (std::size_t j = 0; j < m; ++j) w += prof.value(mu, d2[j]);
          return std::pow(w, ts);
        },
        spec);
  }
  return mc_integrate(
      prop,
      [&](const double* y, const double* d2) {
        double w = 0.0;
        for (std::size_t j = 0; j < m; ++j) w += prof.value(mu, d2[j]);
        double r2 = 0.0;
        for (int i = 0; i < N; ++i) r2 += y[i] * y[i];
        return V->value(std::sqrt(r2)) * w * w;
      },
      spec);
}

inline MCResult mc_global(const Configuration& cfg, const RadialPotential* V, MCTarget target, const MCSpec& spec) {
  cfg.validate();
  return mc_global(make_centers(cfg), cfg.mu, V, target, spec);
}

struct EnergyBreakdown {
  double self_energy = 0.0;        // 2k (1/N) int U^{2*}
  double gradient_diag = 0.0;      // 2k int |grad U|^2
  double potential_diag = 0.0;     // sum_j int V U_j^2
  double potential_cross = 0.0;    // sum_{i != j} int V U_i U_j
  double interaction_same = 0.0;   // sum over ordered same-ring pairs of int grad U_i . grad U_j
  double interaction_cross = 0.0;  // same, cross-ring pairs
  double nonlinear_full = 0.0;     // -(1/2*) int W^{2*}
  double total = 0.0;
  double mc_std_err = 0.0;         // in energy units
  double mc_value = 0.0;           // int W^{2*}
  double mc_rel_std_err = 0.0;
  double quad_error = 0.0;         // accumulated quadrature error estimate, energy units
  double max_ibp_defect = 0.0;     // max |int_grad - int_pow| / |int_pow| over evaluated pairs
  double rel_tol = 0.0;
  std::uint64_t mc_samples = 0;

  double non_constant() const { return total - self_energy; }
};

// Direct energy of the ansatz. Every center is equivalent to x_1^+ under the symmetry group,
// and the reflection y2 -> -y2 pairs j with k + 2 - j, so only about k pair integrals are needed.
inline EnergyBreakdown direct_energy(const Configuration& cfg, const RadialPotential& V, const QuadratureSpec& qspec,
                                     const MCSpec& mspec) {
  cfg.validate();
  if (2 * cfg.k > 64) throw domain_error("direct energy is limited to 2k <= 64 centers");
  const CenterSet c = make_centers(cfg);
  const int k = cfg.k;
  const double mu = cfg.mu;
  const double ts = 2.0 * cfg.N / (cfg.N - 2);
  const auto x0 = c.center(Ring::upper, 1);
  EnergyBreakdown e;
  e.rel_tol = qspec.rel_tol;

  auto ibp = [&](const PairIntegrals& p) {
    e.max_ibp_defect = std::max(e.max_ibp_defect, std::abs(p.int_grad - p.int_pow) / std::abs(p.int_pow));
  };

  // diagonal
  const PairIntegrals diag = pair_interaction(x0, x0, mu, qspec);
  ibp(diag);
  const PotentialIntegral vdiag = potential_pair(V, x0, x0, mu, qspec);
  e.gradient_diag = 2.0 * k * diag.int_grad;
  e.self_energy = 2.0 * k * diag.int_pow / cfg.N;
  e.potential_diag = 2.0 * k * vdiag.value;
  double qerr = 0.5 * 2.0 * k * (diag.err_grad + vdiag.error);

  for (int ring = 0; ring < 2; ++ring) {
    const Ring which = ring == 0 ? Ring::upper : Ring::lower;
    for (int j = 1; j <= k / 2 + 1; ++j) {
      if (which == Ring::upper && j == 1) continue;
      const bool middle = (k % 2 == 0) && (j == k / 2 + 1);
      const double mult = (j == 1 || middle) ? 1.0 : 2.0;
      const auto xj = c.center(which, j);
      const PairIntegrals pij = pair_interaction(x0, xj, mu, qspec);
      ibp(pij);
      const PotentialIntegral vij = potential_pair(V, x0, xj, mu, qspec);
      const double w = 2.0 * k * mult;
      (which == Ring::upper ? e.interaction_same : e.interaction_cross) += w * pij.int_grad;
      e.potential_cross += w * vij.value;
      qerr += 0.5 * w * (pij.err_grad + vij.error);
    }
  }

  const MCResult mc = mc_global(c, mu, nullptr, MCTarget::W_pow_2star, mspec);
  e.mc_value = mc.value;
  e.mc_samples = mc.samples;
  e.mc_rel_std_err = mc.std_err / std::abs(mc.value);
  e.mc_std_err = mc.std_err / ts;
  e.nonlinear_full = -mc.value / ts;
  e.quad_error = qerr;
  e.total = 0.5 * (e.gradient_diag + e.interaction_same + e.interaction_cross) +
            0.5 * (e.potential_diag + e.potential_cross) + e.nonlinear_full;
  return e;
}

}  // namespace dtower
