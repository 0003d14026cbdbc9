#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "dtower/constants.hpp"
#include "dtower/geometry.hpp"
#include "dtower/integrals.hpp"
#include "dtower/potentials.hpp"
#include "dtower/sampling.hpp"

namespace dtower {

struct ResidualSample {
  Point y;
  double e;
  double envelope;
};

namespace detail {

// e from the squared distances to every center; -Delta W = sum U_j^{2*-1} exactly.
inline double residual_from_d2(const BubbleProfile& u, double mu, double v, const double* d2, std::size_t m) {
  double w = 0.0, powers = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    w += u.value(mu, d2[j]);
    powers += u.power_value(mu, d2[j]);
  }
  return v * w - (std::pow(w, u.power()) - powers);
}

}  // namespace detail

// e(y) = -Delta W + V W - W^{2*-1} = V W - (W^{2*-1} - sum_j U_j^{2*-1}).
inline double residual_at(const CenterSet& centers, double mu, const RadialPotential& V, std::span<const double> y) {
  if (y.size() != std::size_t(centers.N)) throw domain_error("point dimension mismatch");
  const BubbleProfile u(centers.N);
  std::vector<double> d2(centers.size());
  double r2 = 0.0;
  for (double c : y) r2 += c * c;
  for (std::size_t j = 0; j < centers.size(); ++j) d2[j] = dist2(centers[j], y);
  return detail::residual_from_d2(u, mu, V.value(std::sqrt(r2)), d2.data(), d2.size());
}

inline double residual_at(const Configuration& cfg, const RadialPotential& V, std::span<const double> y) {
  cfg.validate();
  return residual_at(make_centers(cfg), cfg.mu, V, y);
}

struct ResidualNorm {
  double norm = 0.0;      // L^{2N/(N+2)} norm of e
  double std_err = 0.0;   // delta method from the Monte Carlo error of int |e|^{2N/(N+2)}
  double integral = 0.0;
  double integral_std_err = 0.0;
  bool budget_exceeded = false;
  std::uint64_t samples = 0;
};

// Conjugate Sobolev exponent 2N/(N+2).
inline double dual_exponent(int N) { return 2.0 * N / (N + 2); }

inline ResidualNorm residual_norm(const CenterSet& centers, double mu, const RadialPotential& V, MCSpec spec) {
  const int N = centers.N;
  Dimension{N};
  // V W decays like |y|^{-(N-2)}; its dual-exponent power is integrable only if V vanishes at infinity when N <= 6
  if (N <= 6 && V.value(1e8) > 0)
    throw domain_error("L^{2N/(N+2)} norm of the residual diverges unless V decays at infinity (N <= 6)");
  if (spec.bubble_dof == 0.0) spec.bubble_dof = 1.0;
  double bg = spec.background_scale;
  if (!(bg > 0)) {
    bg = 0.0;
    for (std::size_t j = 0; j < centers.size(); ++j) bg = std::max(bg, detail::norm(centers[j]));
  }
  const MixtureProposal prop(centers, mu, spec.bubble_dof, spec.background_weight, spec.background_dof, bg);
  const BubbleProfile u(N);
  const double p = dual_exponent(N);
  const std::size_t m = centers.size();
  const MCResult mc = mc_integrate(
      prop,
      [&](const double* y, const double* d2) {
        double r2 = 0.0;
        for (int i = 0; i < N; ++i) r2 += y[i] * y[i];
        return std::pow(std::abs(detail::residual_from_d2(u, mu, V.value(std::sqrt(r2)), d2, m)), p);
      },
      spec);
  ResidualNorm out;
  out.integral = mc.value;
  out.integral_std_err = mc.std_err;
  out.samples = mc.samples;
  out.budget_exceeded = mc.budget_exceeded;
  out.norm = std::pow(mc.value, 1.0 / p);
  out.std_err = out.norm / (p * mc.value) * mc.std_err;
  return out;
}

inline ResidualNorm residual_norm(const Configuration& cfg, const RadialPotential& V, const MCSpec& spec) {
  cfg.validate();
  return residual_norm(make_centers(cfg), cfg.mu, V, spec);
}

// The two branches of k max{ k^{-1/2*} (k/mu)^{(N+2)/2 - tau}, mu^{-min((N-2)/2, 2 - tau)} }.
struct ResidualBound {
  double interaction_branch;
  double potential_branch;
  double value() const { return std::max(interaction_branch, potential_branch); }
};

inline ResidualBound residual_bound(int N, int k, double mu, double tau = 0.1) {
  const double kk = k;
  const double ts = 2.0 * N / (N - 2);
  return {kk * std::pow(kk, -1.0 / ts) * std::pow(kk / mu, 0.5 * (N + 2) - tau),
          kk * std::pow(mu, -std::min(0.5 * (N - 2), 2.0 - tau))};
}

// A configuration on the scaling path: r fixed, h = h_hat k^{-(N-3)/(N-1)}, mu = mu_hat k^{(N-2)/(N-4)}.
inline Configuration scaling_path_config(int N, int k, double r, double h_hat, double mu_hat) {
  Configuration cfg{N, k, r, h_hat * std::pow(double(k), -double(N - 3) / (N - 1)),
                    mu_hat * std::pow(double(k), double(N - 2) / (N - 4))};
  cfg.validate();
  return cfg;
}

struct ResidualScalingRow {
  int k = 0;
  double h = 0.0;
  double mu = 0.0;
  double norm = 0.0;
  double std_err = 0.0;
  double bound = 0.0;  // the bound without its constant
  double interaction_branch = 0.0;
  double potential_branch = 0.0;
  double fitted_C = 0.0;  // norm / bound
};

struct ResidualScaling {
  std::vector<ResidualScalingRow> rows;
  double C_geometric_mean = 0.0;
  double C_spread = 0.0;  // max / min of fitted_C
};

inline ResidualScaling residual_scaling(int N, const std::vector<int>& ks, double r, double h_hat, double mu_hat,
                                        const RadialPotential& V, const MCSpec& spec, double tau = 0.1) {
  if (ks.empty()) throw domain_error("k list must not be empty");
  ResidualScaling out;
  double log_sum = 0.0, cmin = INFINITY, cmax = 0.0;
  for (int k : ks) {
    const Configuration cfg = scaling_path_config(N, k, r, h_hat, mu_hat);
    const ResidualNorm rn = residual_norm(cfg, V, spec);
    const ResidualBound b = residual_bound(N, k, cfg.mu, tau);
    ResidualScalingRow row{k, cfg.h, cfg.mu, rn.norm, rn.std_err, b.value(), b.interaction_branch,
                           b.potential_branch, rn.norm / b.value()};
    log_sum += std::log(row.fitted_C);
    cmin = std::min(cmin, row.fitted_C);
    cmax = std::max(cmax, row.fitted_C);
    out.rows.push_back(row);
  }
  out.C_geometric_mean = std::exp(log_sum / double(ks.size()));
  out.C_spread = cmax / cmin;
  return out;
}

enum class EnvelopeKind { bubbles, h_derivatives };

struct EnvelopeFit {
  double C_star = 0.0;         // max S/E with the ln k factor when alpha = 1
  double C_star_no_log = 0.0;  // same without the ln k factor
  double ratio_at_center = 0.0;
  Point argmax;
  int samples_used = 0;
  int rejected = 0;
};

inline bool in_first_upper_cell(const Configuration& cfg, std::span<const double> y) {
  return cell_index(cfg, y) == Cell{1, 1};
}

namespace detail {

// Sum over all centers other than x_1^+ of U (or |dU/dh|), and the envelope without its log factor.
inline double envelope_sum(const Configuration& cfg, const CenterSet& c, EnvelopeKind kind, std::span<const double> y) {
  const BubbleProfile u(cfg.N);
  const double t = cfg.r * cfg.h / cfg.s();
  double s = 0.0;
  for (std::size_t idx = 1; idx < c.size(); ++idx) {
    const auto x = c[idx];
    const double d2 = dist2(x, y);
    if (kind == EnvelopeKind::bubbles) {
      s += u.value(cfg.mu, d2);
      continue;
    }
    // dx/dh = (-t cos theta, -t sin theta, +-r), and dU/dx = -radial_factor (y - x)
    const bool upper = idx < std::size_t(cfg.k);
    const double theta = 2.0 * std::numbers::pi * double(idx % std::size_t(cfg.k)) / cfg.k;
    const double dot = -t * std::cos(theta) * (y[0] - x[0]) - t * std::sin(theta) * (y[1] - x[1]) +
                       (upper ? 1.0 : -1.0) * cfg.r * (y[2] - x[2]);
    s += std::abs(u.radial_factor(cfg.mu, d2) * dot);
  }
  return s;
}

inline double envelope_shape(const Configuration& cfg, EnvelopeKind kind, double alpha, double dist) {
  const int N = cfg.N;
  const double mu = cfg.mu;
  const double lead = kind == EnvelopeKind::bubbles ? 0.5 * (N - 2) : 0.5 * N;
  const double decay = kind == EnvelopeKind::bubbles ? N - 2 - alpha : N - 1 - alpha;
  return std::pow(mu, lead) * std::pow(1.0 + mu * dist, -decay) * std::pow(double(cfg.k) / mu, alpha);
}

}  // namespace detail

// Max of S/E over samples stratified in distance shells about x_1^+ inside Omega_1^+.
inline EnvelopeFit envelope_fit(const Configuration& cfg, double alpha, int samples, EnvelopeKind kind,
                                std::uint64_t seed = 20240917) {
  cfg.validate();
  const int N = cfg.N;
  const double amax = kind == EnvelopeKind::bubbles ? N - 2 : N - 1;
  if (!(alpha >= 1 && alpha <= amax)) throw domain_error("alpha outside its admissible range");
  if (samples < 10) throw domain_error("at least 10 samples are needed");
  const CenterSet c = make_centers(cfg);
  const auto x1 = c.center(Ring::upper, 1);
  const double log_factor = alpha == 1.0 ? std::log(double(cfg.k)) : 1.0;
  EnvelopeFit fit;
  auto consider = [&](const Point& y) {
    const double dist = std::sqrt(dist2(x1, y));
    const double e = detail::envelope_shape(cfg, kind, alpha, dist);
    const double s = detail::envelope_sum(cfg, c, kind, y);
    const double ratio = s / e;
    if (ratio / log_factor > fit.C_star) {
      fit.C_star = ratio / log_factor;
      fit.argmax = y;
    }
    fit.C_star_no_log = std::max(fit.C_star_no_log, ratio);
    ++fit.samples_used;
    return ratio / log_factor;
  };
  fit.ratio_at_center = consider(Point(x1.begin(), x1.end()));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit;
  const int shells = 24;
  const double rho_min = 1e-3 / cfg.mu, rho_max = 8.0 * cfg.r;
  const double ratio = std::pow(rho_max / rho_min, 1.0 / shells);
  const int per_shell = std::max(1, (samples - 1) / shells);
  for (int s = 0; s < shells; ++s) {
    const double lo = rho_min * std::pow(ratio, s);
    for (int i = 0; i < per_shell; ++i) {
      Point y(static_cast<std::size_t>(N));
      double n2 = 0.0;
      for (auto& v : y) {
        v = gauss(rng);
        n2 += v * v;
      }
      const double rho = lo * std::pow(ratio, unit(rng));
      const double scale = rho / std::sqrt(n2);
      for (int d = 0; d < N; ++d) y[std::size_t(d)] = x1[std::size_t(d)] + scale * y[std::size_t(d)];
      if (!in_first_upper_cell(cfg, y)) {
        ++fit.rejected;
        continue;
      }
      consider(y);
    }
  }
  return fit;
}

}  // namespace dtower
