#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/differentiation/finite_difference.hpp>

#include "dtower/constants.hpp"
#include "dtower/flow.hpp"
#include "dtower/geometry.hpp"
#include "dtower/integrals.hpp"
#include "dtower/lattice_sums.hpp"
#include "dtower/optimizer.hpp"
#include "dtower/potentials.hpp"
#include "dtower/reduced_energy.hpp"
#include "dtower/residual.hpp"

namespace dtower {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<std::pair<std::string, double>> timings;  // wall-clock, kept apart so metrics stay reproducible
};

struct AcceptanceOptions {
  std::uint64_t seed = 20240917;
  unsigned threads = 0;
  std::uint64_t energy_mc_samples = 20'000'000;
  std::uint64_t residual_mc_samples = 1'000'000;
};

namespace detail {

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(clock::now() - t0_).count(); }

 private:
  using clock = std::chrono::steady_clock;
  clock::time_point t0_ = clock::now();
};

// Least-squares slope of y against x.
inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = double(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  return sxy / sxx;
}

inline std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

inline Point along_axis(int N, double d) {
  Point x(static_cast<std::size_t>(N), 0.0);
  x[0] = d;
  return x;
}

}  // namespace detail

// Closed forms against independent quadrature for N = 5..10.
inline CriterionResult criterion_constants() {
  detail::Stopwatch sw;
  CriterionResult res{1, "constants: closed form vs quadrature", true, "", 0, {}};
  double worst = 0.0;
  for (int N = 5; N <= 10; ++N) {
    const CrosscheckReport rep = crosscheck_constants(N, 1e-9);
    worst = std::max(worst, rep.max_rel_diff);
    res.passed = res.passed && rep.passed;
    res.metrics.push_back({"max_rel_diff_N" + std::to_string(N), rep.max_rel_diff});
  }
  res.seconds = sw.seconds();
  res.passed = res.passed && res.seconds < 10.0;
  res.detail = "max rel diff " + detail::fmt(worst, 3) + " (limit 1e-9), runtime limit 10 s";
  return res;
}

// int U1^{2*-1} U2 d^3 / B0 at N = 5, mu = 1.
inline CriterionResult criterion_interaction_law() {
  detail::Stopwatch sw;
  CriterionResult res{2, "interaction law: int_pow d^{N-2} / B0 -> 1", false, "", 0, {}};
  const int N = 5;
  const double B0 = eval_constants(N).B0;
  const QuadratureSpec q{1e-10, 0.0, 20};
  std::vector<double> lx, ly;
  double last = 0.0;
  for (double d : {10.0, 20.0, 40.0, 80.0}) {
    const Point x1 = detail::along_axis(N, 0.0), x2 = detail::along_axis(N, d);
    const PairIntegrals p = pair_interaction(x1, x2, 1.0, q);
    const double ratio = p.int_pow * std::pow(d, N - 2) / B0;
    res.metrics.push_back({"ratio_d" + detail::fmt(d), ratio});
    lx.push_back(std::log(d));
    ly.push_back(std::log(std::abs(ratio - 1.0)));
    last = ratio;
  }
  const double slope = detail::ls_slope(lx, ly);
  res.metrics.push_back({"slope", slope});
  res.seconds = sw.seconds();
  res.passed = std::abs(last - 1.0) < 0.02 && slope >= -2.3 && slope <= -1.5 && res.seconds < 120.0;
  res.detail = "ratio at d=80 " + detail::fmt(last, 8) + " (within 2%), slope " + detail::fmt(slope, 4) +
               " (in [-2.3,-1.5])";
  return res;
}

// int U1 U2 mu^{N-2} d^{N-4} stays in a factor-2 band for d in [5, 80].
inline CriterionResult criterion_overlap_order() {
  detail::Stopwatch sw;
  CriterionResult res{3, "overlap order: int_l2 mu^{N-2} d^{N-4} bounded", false, "", 0, {}};
  const int N = 5;
  const QuadratureSpec q{1e-10, 0.0, 20};
  double lo = INFINITY, hi = 0.0;
  for (double d : {5.0, 10.0, 20.0, 40.0, 80.0}) {
    const PairIntegrals p = pair_interaction(detail::along_axis(N, 0.0), detail::along_axis(N, d), 1.0, q);
    const double v = p.int_l2 * std::pow(d, N - 4);
    res.metrics.push_back({"scaled_d" + detail::fmt(d), v});
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  res.metrics.push_back({"band_ratio", hi / lo});
  res.seconds = sw.seconds();
  res.passed = hi / lo < 2.0;
  res.detail = "max/min " + detail::fmt(hi / lo, 5) + " (limit 2)";
  return res;
}

inline CriterionResult criterion_lattice_sums() {
  detail::Stopwatch sw;
  CriterionResult res{4, "lattice sums: leading laws and correction rates", false, "", 0, {}};
  const std::vector<int> ks{50, 100, 200, 400, 800};

  SumQuery b3{5, 400, 1.0, 0.01, 3.0, RingKind::same, SumWeight::one};
  const double ratio = sum_exact(b3) / sum_asymptotic(b3).leading;
  const bool ok_b3 = std::abs(ratio - 1.0) < 0.01;

  SumQuery s5{5, 0, 1.0, 0.0, 3.0, RingKind::same, SumWeight::one};
  const RateFit f5 = rate_study(s5, ks, [](int) { return 0.01; });
  SumQuery s6{6, 0, 1.0, 0.0, 4.0, RingKind::same, SumWeight::one};
  const RateFit f6 = rate_study(s6, ks, [](int) { return 0.01; });
  const bool ok_z1 = !f5.saturated && !f6.saturated && f5.slope <= -1.6 && f6.slope >= -2.3 && f6.slope <= -1.7;

  // zeta2 along hk = 20: the cross-ring error should depend on hk alone
  SumQuery c5{5, 0, 1.0, 0.0, 3.0, RingKind::cross, SumWeight::one};
  const RateFit z2 = rate_study(c5, ks, [](int k) { return 20.0 / k; });
  double emin = INFINITY, emax = 0.0;
  for (const auto& p : z2.points) {
    emin = std::min(emin, std::abs(p.rel_err));
    emax = std::max(emax, std::abs(p.rel_err));
  }
  const double z2_spread = emax / emin;
  const bool ok_z2 = z2_spread <= 1.3;

  res.metrics = {{"b3_ratio", ratio}, {"zeta1_slope_N5", f5.slope}, {"zeta1_slope_N6", f6.slope},
                 {"zeta2_err_min", emin}, {"zeta2_err_max", emax}, {"zeta2_spread", z2_spread}};
  res.seconds = sw.seconds();
  res.passed = ok_b3 && ok_z1 && ok_z2 && res.seconds < 60.0;
  res.detail = "b3 ratio " + detail::fmt(ratio, 8) + (ok_b3 ? " ok" : " FAIL") + "; zeta1 slopes N5 " +
               detail::fmt(f5.slope, 4) + " N6 " + detail::fmt(f6.slope, 4) + (ok_z1 ? " ok" : " FAIL") +
               "; zeta2 error max/min along h=20/k " + detail::fmt(z2_spread, 4) + (ok_z2 ? " ok" : " FAIL (limit 1.3)");
  return res;
}

// grad_main against high-order central differences of the main term, in the scaled variables.
inline CriterionResult criterion_gradient(std::uint64_t seed) {
  namespace fd = boost::math::differentiation;
  detail::Stopwatch sw;
  CriterionResult res{5, "gradient consistency: grad_main vs finite differences", false, "", 0, {}};
  const auto V = unit_max_bump();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit;
  double worst = 0.0;
  int points = 0;
  for (int N : {5, 6, 7}) {
    const int k = 128;
    const ParameterBox box = make_boxes(N, k, 1.0, *V, WidthMode::fixed);
    const ScaledObjective obj{N, k, V.get()};
    double worst_N = 0.0;
    for (int i = 0; i < 100; ++i) {
      std::array<double, 3> z{};
      for (std::size_t d = 0; d < 3; ++d) z[d] = box.lo[d] + (box.hi[d] - box.lo[d]) * (0.02 + 0.96 * unit(rng));
      const auto g = obj.gradient(z);
      const double scale = std::max({std::abs(g[0]), std::abs(g[1]), std::abs(g[2])});
      for (std::size_t d = 0; d < 3; ++d) {
        // relative perturbation keeps the stencil inside the positive orthant
        auto f = [&](double t) {
          auto zz = z;
          zz[d] *= 1.0 + t;
          return obj.value(zz);
        };
        const double num = fd::finite_difference_derivative<decltype(f), double, 6>(f, 0.0) / z[d];
        worst_N = std::max(worst_N, std::abs(num - g[d]) / scale);
      }
      ++points;
    }
    res.metrics.push_back({"max_rel_err_N" + std::to_string(N), worst_N});
    worst = std::max(worst, worst_N);
  }
  res.seconds = sw.seconds();
  res.passed = worst < 1e-6;
  res.detail = std::to_string(points) + " points, max rel err " + detail::fmt(worst, 3) + " (limit 1e-6)";
  return res;
}

inline CriterionResult criterion_scalings() {
  detail::Stopwatch sw;
  CriterionResult res{6, "critical-point scalings at N = 5", true, "", 0, {}};
  const auto V = unit_max_bump();
  std::ostringstream os;
  for (int k : {64, 128, 256, 512}) {
    detail::Stopwatch one;
    const ParameterBox box = make_boxes(5, k, 1.0, *V, WidthMode::fixed);
    const CriticalPoint cp = solve_critical(5, k, *V, 1.0, box, SolveMode::max);
    const double t = one.seconds();
    const bool ok = cp.h_rel_residual < 0.05 && cp.mu_rel_residual < 0.05 && t < 1.0;
    res.passed = res.passed && ok;
    res.metrics.push_back({"h_rel_k" + std::to_string(k), cp.h_rel_residual});
    res.metrics.push_back({"mu_rel_k" + std::to_string(k), cp.mu_rel_residual});
    res.timings.push_back({"seconds_k" + std::to_string(k), t});
    os << "k=" << k << " h " << detail::fmt(cp.h_rel_residual, 3) << " mu " << detail::fmt(cp.mu_rel_residual, 3)
       << (ok ? "" : " FAIL") << "; ";
  }
  res.seconds = sw.seconds();
  res.detail = os.str() + "limits 5% and 1 s per solve";
  return res;
}

inline CriterionResult criterion_energy(const AcceptanceOptions& opt) {
  detail::Stopwatch sw;
  CriterionResult res{7, "energy cross-validation: direct vs semi-analytic", false, "", 0, {}};
  const auto V = unit_max_bump();
  const Configuration cfg{5, 6, 1.0, 0.2, 50.0};
  MCSpec ms;
  ms.samples = opt.energy_mc_samples;
  ms.seed = opt.seed;
  ms.threads = opt.threads;
  const EnergyBreakdown e = direct_energy(cfg, *V, QuadratureSpec{1e-8, 0.0, 20}, ms);
  const ReducedValue semi = F_semi(cfg, *V);
  const double diff = std::abs(e.total - semi.F);
  const double allowed = 3.0 * e.mc_std_err + semi.remainder_budget;
  const double direct_nc = e.total - e.self_energy;
  const double semi_nc = semi.terms.non_constant();
  const bool same_sign = (direct_nc < 0) == (semi_nc < 0);
  const bool within_half = std::abs(direct_nc - semi_nc) <= 0.5 * std::abs(semi_nc);
  const bool budget_ok = e.mc_rel_std_err <= 5e-4;
  res.metrics = {{"direct_total", e.total},       {"semi_F", semi.F},
                 {"abs_diff", diff},              {"allowed", allowed},
                 {"mc_std_err", e.mc_std_err},    {"mc_rel_std_err", e.mc_rel_std_err},
                 {"remainder_budget", semi.remainder_budget},
                 {"direct_non_constant", direct_nc}, {"semi_non_constant", semi_nc},
                 {"quad_error", e.quad_error},    {"max_ibp_defect", e.max_ibp_defect}};
  res.seconds = sw.seconds();
  res.passed = diff <= allowed && same_sign && within_half && budget_ok && res.seconds < 600.0;
  res.detail = "|total - F_semi| = " + detail::fmt(diff, 5) + " vs allowed " + detail::fmt(allowed, 5) +
               "; non-constant parts direct " + detail::fmt(direct_nc, 5) + " semi " + detail::fmt(semi_nc, 5) +
               (same_sign && within_half ? " agree" : " DISAGREE") + "; MC rel std err " +
               detail::fmt(e.mc_rel_std_err, 3);
  return res;
}

inline CriterionResult criterion_confinement(std::uint64_t seed) {
  detail::Stopwatch sw;
  CriterionResult res{8, "face signs and gradient-flow confinement at N = 6", false, "", 0, {}};
  const int N = 6, k = 128, n = 20;
  const auto V = unit_max_bump();
  const ParameterBox box = make_boxes(N, k, 1.0, *V, WidthMode::shrinking);
  int bad[4] = {0, 0, 0, 0};
  auto at = [&](double r, double h, double mu) { return grad_main(N, k, r, h, mu, *V); };
  for (int i = 0; i < n; ++i) {
    const double r = box.r_lo() + (box.r_hi() - box.r_lo()) * i / (n - 1);
    for (int j = 0; j < n; ++j) {
      const double tj = double(j) / (n - 1);
      const double mu = box.mu_lo() + (box.mu_hi() - box.mu_lo()) * tj;
      const double h = box.h_lo() + (box.h_hi() - box.h_lo()) * tj;
      if (!(at(r, box.h_lo(), mu).dF_dh > 0)) ++bad[0];
      if (!(at(r, box.h_hi(), mu).dF_dh < 0)) ++bad[1];
      if (!(at(r, h, box.mu_lo()).dF_dmu > 0)) ++bad[2];
      if (!(at(r, h, box.mu_hi()).dF_dmu < 0)) ++bad[3];
    }
  }
  const int face_violations = bad[0] + bad[1] + bad[2] + bad[3];

  // flow in the minimum case
  const auto Vm = unit_min_bump();
  const ParameterBox mbox = make_boxes(N, k, 1.0, *Vm, WidthMode::shrinking);
  const FlowReport rep = flow_confinement(N, k, *Vm, random_starts(mbox, 10, seed), mbox);

  res.metrics = {{"violations_h_lo", double(bad[0])},  {"violations_h_hi", double(bad[1])},
                 {"violations_mu_lo", double(bad[2])}, {"violations_mu_hi", double(bad[3])},
                 {"box_width", box.width},             {"flow_starts", double(rep.starts)},
                 {"flow_exits_h_mu", double(rep.exits_h_mu)}, {"flow_exits_r", double(rep.exits_r)},
                 {"flow_reached_t1", double(rep.reached_t1)}, {"flow_stalled", double(rep.stalled)},
                 {"flow_underflow", double(rep.underflow)}};
  res.seconds = sw.seconds();
  res.passed = face_violations == 0 && rep.exits_h_mu == 0 && rep.underflow == 0 && rep.starts == 10;
  res.detail = std::to_string(face_violations) + " sign violations over 4 x 400 face points; flow: " +
               std::to_string(rep.exits_h_mu) + " h/mu exits, " + std::to_string(rep.exits_r) + " r exits, " +
               std::to_string(rep.reached_t1) + " reached t1, " + std::to_string(rep.stalled) + " at rest";
  return res;
}

inline CriterionResult criterion_residual(const AcceptanceOptions& opt) {
  detail::Stopwatch sw;
  CriterionResult res{9, "residual scaling: fitted constant stable in k", false, "", 0, {}};
  const int N = 5;
  const auto V = unit_max_bump();
  const ReductionConstants& c = eval_constants(N);
  MCSpec ms;
  ms.samples = opt.residual_mc_samples;
  ms.seed = opt.seed;
  ms.threads = opt.threads;
  const ResidualScaling sc = residual_scaling(N, {8, 16, 32}, 1.0, c.h0, c.mu0(1.0, V->value(1.0)), *V, ms);
  for (const auto& row : sc.rows) {
    res.metrics.push_back({"C_k" + std::to_string(row.k), row.fitted_C});
    res.metrics.push_back({"norm_k" + std::to_string(row.k), row.norm});
    res.metrics.push_back({"std_err_k" + std::to_string(row.k), row.std_err});
  }
  res.metrics.push_back({"C_spread", sc.C_spread});
  res.seconds = sw.seconds();
  res.passed = sc.C_spread < 3.0 && res.seconds < 600.0;
  res.detail = "max/min fitted C " + detail::fmt(sc.C_spread, 4) + " (limit 3)";
  return res;
}

// PDE identity, integration by parts, symmetry and Monte Carlo sanity.
inline CriterionResult criterion_identities(const AcceptanceOptions& opt) {
  detail::Stopwatch sw;
  CriterionResult res{10, "identity suite: PDE, integration by parts, symmetry, Monte Carlo", true, "", 0, {}};
  std::ostringstream os;
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit;

  // -Delta U = U^{2*-1}
  double pde = 0.0;
  for (int N = 5; N <= 8; ++N) {
    const BubbleProfile u(N);
    for (int i = 0; i < 250; ++i) {
      const double mu = std::pow(10.0, 2.0 * unit(rng) - 1.0);
      double d2 = 0.0;
      for (int d = 0; d < N; ++d) d2 += gauss(rng) * gauss(rng);
      d2 *= std::pow(10.0, 4.0 * unit(rng) - 2.0);
      pde = std::max(pde, std::abs(-u.laplacian(mu, d2) - u.power_value(mu, d2)) / u.power_value(mu, d2));
    }
  }
  const bool ok_pde = pde < 1e-10;
  os << "PDE " << detail::fmt(pde, 3) << (ok_pde ? "" : " FAIL") << "; ";

  // int grad U1 . grad U2 = int U1^{2*-1} U2
  const QuadratureSpec q{1e-10, 0.0, 20};
  double ibp = 0.0;
  for (double d : {0.0, 0.7, 3.0}) {
    const PairIntegrals p = pair_interaction(detail::along_axis(5, 0.0), detail::along_axis(5, d), 2.0, q);
    ibp = std::max(ibp, std::abs(p.int_grad - p.int_pow) / std::abs(p.int_pow));
  }
  const bool ok_ibp = ibp < 10 * q.rel_tol;
  os << "IBP " << detail::fmt(ibp, 3) << (ok_ibp ? "" : " FAIL") << "; ";

  // symmetry of the ansatz and of the residual
  double sym = 0.0;
  for (const Configuration& cfg : {Configuration{5, 4, 1.0, 0.2, 10.0}, Configuration{6, 7, 2.0, 0.05, 40.0},
                                   Configuration{7, 3, 0.5, 0.6, 3.0}})
    sym = std::max(sym, symmetry_check(cfg, 1000, opt.seed));
  const bool ok_sym = sym < 1e-12;
  os << "symmetry " << detail::fmt(sym, 3) << (ok_sym ? "" : " FAIL") << "; ";

  // single bubble: int U^{2*} = (N/2) A1
  MCSpec ms;
  ms.samples = 200'000;
  ms.seed = opt.seed;
  ms.threads = opt.threads;
  const CenterSet one{5, 1, std::vector<double>(5, 0.0)};
  const MCResult single = mc_global(one, 3.0, nullptr, MCTarget::W_pow_2star, ms);
  const double target = eval_constants(5).bubble_energy();
  const double z_single = std::abs(single.value - target) / single.std_err;
  const bool ok_single = z_single < 3.0;
  os << "single bubble z " << detail::fmt(z_single, 3) << (ok_single ? "" : " FAIL") << "; ";

  // V = 1: int W^2 = sum over pairs of int U_i U_j
  const Configuration cfg{5, 3, 1.0, 0.3, 5.0};
  const ConstantPotential one_v(1.0);
  const CenterSet cs = make_centers(cfg);
  const auto x0 = cs.center(Ring::upper, 1);
  double assembled = 2.0 * cfg.k * pair_interaction(x0, x0, cfg.mu, q).int_l2;
  for (int ring = 0; ring < 2; ++ring)
    for (int j = 1; j <= cfg.k; ++j) {
      if (ring == 0 && j == 1) continue;
      assembled += 2.0 * cfg.k *
                   pair_interaction(x0, cs.center(ring == 0 ? Ring::upper : Ring::lower, j), cfg.mu, q).int_l2;
    }
  const MCResult vw = mc_global(cs, cfg.mu, &one_v, MCTarget::V_W_sq, ms);
  const double z_vw = std::abs(vw.value - assembled) / vw.std_err;
  const bool ok_vw = z_vw < 3.0;
  os << "V W^2 z " << detail::fmt(z_vw, 3) << (ok_vw ? "" : " FAIL");

  res.metrics = {{"pde_max_rel_err", pde}, {"ibp_max_rel_defect", ibp}, {"symmetry_max_dev", sym},
                 {"single_bubble_z", z_single}, {"v_w_sq_z", z_vw}};
  res.seconds = sw.seconds();
  res.passed = ok_pde && ok_ibp && ok_sym && ok_single && ok_vw;
  res.detail = os.str();
  return res;
}

inline std::vector<int> quick_criteria() { return {10, 1, 5}; }

inline CriterionResult run_criterion(int id, const AcceptanceOptions& opt = {}) {
  switch (id) {
    case 1: return criterion_constants();
    case 2: return criterion_interaction_law();
    case 3: return criterion_overlap_order();
    case 4: return criterion_lattice_sums();
    case 5: return criterion_gradient(opt.seed);
    case 6: return criterion_scalings();
    case 7: return criterion_energy(opt);
    case 8: return criterion_confinement(opt.seed);
    case 9: return criterion_residual(opt);
    case 10: return criterion_identities(opt);
  }
  throw domain_error("unknown criterion id " + std::to_string(id));
}

// Runs the listed criteria in order; an exception inside one criterion marks it failed.
inline std::vector<CriterionResult> run_battery(const std::vector<int>& ids, const AcceptanceOptions& opt = {},
                                                const std::function<void(const CriterionResult&)>& on_result = {}) {
  std::vector<CriterionResult> out;
  for (int id : ids) {
    CriterionResult r;
    try {
      r = run_criterion(id, opt);
    } catch (const std::exception& e) {
      r.id = id;
      r.title = "criterion " + std::to_string(id);
      r.passed = false;
      r.detail = std::string("exception: ") + e.what();
    }
    if (on_result) on_result(r);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace dtower
