#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "dtower/constants.hpp"
#include "dtower/reduced_energy.hpp"

namespace dtower {

struct FlowLevels {
  double eta = 0.05;
  double eta0_fraction = 0.1;  // eta0 = fraction * A1

  // Levels of -F: t2 = k(-A1 + eta0), t1 = k(-A1 - A3 (1 + eta) (r0^2 V(r0))^p k^{-2(N-2)/(N-4)}),
  // p = (N-2)/(N-4) being the exponent the optimal mu actually produces.
  double t1(int N, int k, double r0, const RadialPotential& V) const {
    const ReductionConstants& c = eval_constants(N);
    const double p = double(N - 2) / (N - 4);
    return k * (-c.A1 - c.A3 * (1.0 + eta) * std::pow(r0 * r0 * V.value(r0), p) *
                            std::pow(double(k), -2.0 * (N - 2) / (N - 4)));
  }
  double t2(int N, int k) const {
    const ReductionConstants& c = eval_constants(N);
    return k * (-c.A1 + eta0_fraction * c.A1);
  }
};

struct FlowSample {
  double t;
  double r;
  double h;
  double mu;
  double F;
};

enum class FlowOutcome { reached_t1, exited, stalled, step_underflow };

inline std::string to_string(FlowOutcome o) {
  static const char* names[] = {"reached_t1", "exited", "stalled", "step_underflow"};
  return names[int(o)];
}

struct Trajectory {
  std::array<double, 3> start{};  // scaled coordinates
  FlowOutcome outcome = FlowOutcome::stalled;
  Face exit_face = Face::none;
  double final_level = 0.0;  // -F at the end
  std::vector<FlowSample> samples;

  bool escaped_h_or_mu() const {
    return outcome == FlowOutcome::exited && exit_face != Face::r_lo && exit_face != Face::r_hi;
  }
};

struct FlowReport {
  double t1 = 0.0;
  double t2 = 0.0;
  int starts = 0;
  int reached_t1 = 0;
  int exits_r = 0;
  int exits_h_mu = 0;
  int stalled = 0;
  int underflow = 0;
  std::vector<Trajectory> trajectories;
};

struct FlowSpec {
  FlowLevels levels;
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  double t_max = 1e4;       // in the scaled time of the normalized objective
  double dt_min = 1e-14;
  double stall_grad = 1e-9; // normalized gradient norm below which the flow is at rest
  int max_steps = 200000;
};

// Steepest descent of -F (gradient flow in the scaled variables on the normalized objective, so the
// time axis is k-independent; the sign pattern on each face is that of the raw gradient).
inline Trajectory flow_from(const ScaledObjective& obj, const ParameterBox& box, std::array<double, 3> z0,
                            double phi_t1, const FlowSpec& spec) {
  namespace ode = boost::numeric::odeint;
  using State = std::array<double, 3>;
  Trajectory tr;
  tr.start = z0;
  auto record = [&](double t, const State& z) {
    const auto x = obj.to_raw(z);
    tr.samples.push_back({t, x[0], x[1], x[2], F_main(obj.N, obj.k, x[0], x[1], x[2], *obj.V).F});
  };
  auto rhs = [&](const State& z, State& dz, double) {
    const auto g = obj.gradient(z);
    for (std::size_t i = 0; i < 3; ++i) dz[i] = -g[i];
  };
  auto outside = [&](const State& z) -> Face {
    Face worst = Face::none;
    double depth = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      const double span = box.hi[i] - box.lo[i];
      if (z[i] < box.lo[i] && (box.lo[i] - z[i]) / span > depth) {
        depth = (box.lo[i] - z[i]) / span;
        worst = Face(2 * i);
      }
      if (z[i] > box.hi[i] && (z[i] - box.hi[i]) / span > depth) {
        depth = (z[i] - box.hi[i]) / span;
        worst = Face(2 * i + 1);
      }
    }
    return worst;
  };

  auto stepper = ode::make_dense_output(spec.abs_tol, spec.rel_tol, ode::runge_kutta_dopri5<State>());
  stepper.initialize(z0, 0.0, 1e-3);
  record(0.0, z0);
  if (obj.value(z0) < phi_t1) {
    tr.outcome = FlowOutcome::reached_t1;
    tr.final_level = obj.energy_level(obj.value(z0));
    return tr;
  }
  for (int n = 0; n < spec.max_steps; ++n) {
    const auto [t0, t1] = stepper.do_step(rhs);
    const State z = stepper.current_state();
    if (t1 - t0 < spec.dt_min) {
      tr.outcome = FlowOutcome::step_underflow;
      break;
    }
    const Face f = outside(z);
    const bool below = obj.value(z) < phi_t1;
    if (f != Face::none || below) {
      // locate the first event inside the step by bisection on the dense output
      double a = t0, b = t1;
      for (int it = 0; it < 60; ++it) {
        const double m = 0.5 * (a + b);
        State zm{};
        stepper.calc_state(m, zm);
        if (outside(zm) != Face::none || obj.value(zm) < phi_t1) b = m;
        else a = m;
      }
      State ze{};
      stepper.calc_state(b, ze);
      record(b, ze);
      const Face fe = outside(ze);
      // at the event time the level test wins ties: F is already past t1 there
      if (obj.value(ze) < phi_t1) {
        tr.outcome = FlowOutcome::reached_t1;
      } else {
        tr.outcome = FlowOutcome::exited;
        tr.exit_face = fe;
      }
      break;
    }
    record(t1, z);
    const auto g = obj.gradient(z);
    if (std::max({std::abs(g[0]), std::abs(g[1]), std::abs(g[2])}) < spec.stall_grad || t1 > spec.t_max) {
      tr.outcome = FlowOutcome::stalled;
      break;
    }
  }
  const auto& last = tr.samples.back();
  tr.final_level = -last.F;
  return tr;
}

inline std::vector<std::array<double, 3>> random_starts(const ParameterBox& box, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit;
  std::vector<std::array<double, 3>> out;
  for (int i = 0; i < count; ++i) {
    std::array<double, 3> z{};
    for (std::size_t d = 0; d < 3; ++d) z[d] = box.lo[d] + (box.hi[d] - box.lo[d]) * (0.05 + 0.9 * unit(rng));
    out.push_back(z);
  }
  return out;
}

// Runs the flow from each start (scaled coordinates). Starts above t2 are rejected.
inline FlowReport flow_confinement(int N, int k, const RadialPotential& V, const std::vector<std::array<double, 3>>& starts,
                                   const ParameterBox& box, const FlowSpec& spec = {}) {
  if (box.N != N || box.k != k) throw domain_error("box was built for a different (N, k)");
  const ScaledObjective obj{N, k, &V};
  FlowReport rep;
  rep.t1 = spec.levels.t1(N, k, box.r0, V);
  rep.t2 = spec.levels.t2(N, k);
  const double phi_t1 = obj.phi_of_level(rep.t1);
  const double phi_t2 = obj.phi_of_level(rep.t2);
  for (const auto& z0 : starts) {
    if (!box.contains(z0)) throw domain_error("flow start outside the box");
    if (obj.value(z0) > phi_t2) throw domain_error("flow start above the t2 level");
    Trajectory tr = flow_from(obj, box, z0, phi_t1, spec);
    ++rep.starts;
    switch (tr.outcome) {
      case FlowOutcome::reached_t1: ++rep.reached_t1; break;
      case FlowOutcome::exited: (tr.escaped_h_or_mu() ? rep.exits_h_mu : rep.exits_r)++; break;
      case FlowOutcome::stalled: ++rep.stalled; break;
      case FlowOutcome::step_underflow: ++rep.underflow; break;
    }
    rep.trajectories.push_back(std::move(tr));
  }
  return rep;
}

inline void write_trajectory_csv(std::ostream& os, const FlowReport& rep) {
  os << "trajectory,t,r,h,mu,F\n";
  os.precision(17);
  for (std::size_t i = 0; i < rep.trajectories.size(); ++i)
    for (const auto& s : rep.trajectories[i].samples)
      os << i << ',' << s.t << ',' << s.r << ',' << s.h << ',' << s.mu << ',' << s.F << '\n';
}

}  // namespace dtower
