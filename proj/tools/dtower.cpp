// dtower: batch front end for the double-tower toolkit.
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dtower/acceptance.hpp"
#include "dtower/config.hpp"
#include "dtower/constants.hpp"
#include "dtower/flow.hpp"
#include "dtower/geometry.hpp"
#include "dtower/integrals.hpp"
#include "dtower/lattice_sums.hpp"
#include "dtower/optimizer.hpp"
#include "dtower/reduced_energy.hpp"
#include "dtower/residual.hpp"

using nlohmann::ordered_json;
using namespace dtower;

namespace {

constexpr const char* kSchema = "dtower/1";

struct RunConfig {
  int N = 5;
  int k = 6;
  double r = 1.0;
  double h = 0.2;
  double mu = 50.0;
  std::string potential;  // empty: bump, or bump-min where a minimum of s^2 V is needed
  double rel_tol = 1e-8;
  std::uint64_t mc_samples = 1'000'000;
  std::uint64_t seed = 20240917;
  unsigned threads = 0;
  std::string out;
  std::string format;  // empty: the subcommand's native format
  std::string config;

  Configuration configuration() const { return {N, k, r, h, mu}; }
  PotentialPtr make_V() const { return parse_potential(potential, "potential", N); }
  QuadratureSpec quad() const {
    QuadratureSpec q;
    q.rel_tol = rel_tol;
    q.validate();
    return q;
  }
  MCSpec mc() const {
    MCSpec m;
    m.samples = mc_samples;
    m.seed = seed;
    m.threads = threads;
    m.validate();
    return m;
  }
};

// A failed numerical check; carries the acceptance criterion it belongs to.
struct CheckFailure {
  int criterion;
  std::string what;
};

// The config file wins over flags.
void apply_config_file(RunConfig& rc) {
  if (rc.config.empty()) return;
  const FileConfig fc = load_config(rc.config);
  if (fc.N) rc.N = *fc.N;
  if (fc.k) rc.k = *fc.k;
  if (fc.r) rc.r = *fc.r;
  if (fc.h) rc.h = *fc.h;
  if (fc.mu) rc.mu = *fc.mu;
  if (fc.potential) rc.potential = *fc.potential;
  if (fc.rel_tol) rc.rel_tol = *fc.rel_tol;
  if (fc.mc_samples) rc.mc_samples = *fc.mc_samples;
  if (fc.seed) rc.seed = *fc.seed;
  if (fc.threads) rc.threads = *fc.threads;
  if (fc.out) rc.out = *fc.out;
  if (fc.format) rc.format = *fc.format;
}

void emit(const RunConfig& rc, const std::string& text) {
  if (rc.out.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream f(rc.out);
  if (!f) throw ConfigError("out", "cannot write '" + rc.out + "'");
  f << text;
  if (!text.empty() && text.back() != '\n') f << '\n';
}

std::string dump(const ordered_json& j) { return j.dump(2); }

double round_sig(double v, int digits) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return std::stod(os.str());
}

void require_format(const RunConfig& rc, std::initializer_list<const char*> allowed) {
  for (const char* a : allowed)
    if (rc.format == a) return;
  throw ConfigError("format", "'" + rc.format + "' is not supported by this subcommand");
}

ordered_json config_json(const RunConfig& rc) {
  return {{"N", rc.N}, {"k", rc.k}, {"r", rc.r}, {"h", rc.h}, {"mu", rc.mu}, {"potential", rc.potential}};
}

template <class Row>
std::string csv(const std::vector<std::string>& header, const std::vector<Row>& rows) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << '\n';
  }
  return os.str();
}

// ---- subcommands ----

void run_constants(const RunConfig& rc) {
  require_format(rc, {"json"});
  const ReductionConstants& c = eval_constants(rc.N);
  const CrosscheckReport rep = crosscheck_constants(rc.N, 1e-9);
  ordered_json j{{"schema", kSchema},
                 {"N", rc.N},
                 {"A1", round_sig(c.A1, 15)},
                 {"A2", round_sig(c.A2, 15)},
                 {"B0", round_sig(c.B0, 15)},
                 {"B1", round_sig(c.B1, 15)},
                 {"B2", round_sig(c.B2, 15)},
                 {"A3", round_sig(c.A3, 15)},
                 {"h0", round_sig(c.h0, 15)},
                 {"B0_over_half_N_A1", round_sig(rep.ratio, 15)}};
  ordered_json checks = ordered_json::array();
  for (const auto& e : rep.entries)
    checks.push_back({{"name", e.name}, {"closed_form", e.closed_form}, {"quadrature", e.numeric}, {"rel_diff", e.rel_diff}});
  j["crosscheck"] = {{"tolerance", rep.tol}, {"max_rel_diff", rep.max_rel_diff}, {"passed", rep.passed}, {"entries", checks}};
  emit(rc, dump(j));
  if (!rep.passed) throw CheckFailure{1, "closed form and quadrature differ by " + std::to_string(rep.max_rel_diff)};
}

void run_geometry(const RunConfig& rc) {
  require_format(rc, {"csv", "json"});
  const Configuration cfg = rc.configuration();
  const CenterSet c = make_centers(cfg);
  const double sym = symmetry_check(cfg, 1000, rc.seed);
  if (rc.format == "csv") {
    std::ostringstream os;
    os.precision(17);
    os << "ring,j";
    for (int i = 1; i <= cfg.N; ++i) os << ",y" << i;
    os << '\n';
    for (int ring = 0; ring < 2; ++ring)
      for (int j = 1; j <= cfg.k; ++j) {
        os << (ring == 0 ? "+" : "-") << ',' << j;
        for (double v : c.center(ring == 0 ? Ring::upper : Ring::lower, j)) os << ',' << v;
        os << '\n';
      }
    emit(rc, os.str());
  } else {
    ordered_json centers = ordered_json::array();
    for (int ring = 0; ring < 2; ++ring)
      for (int j = 1; j <= cfg.k; ++j) {
        const auto x = c.center(ring == 0 ? Ring::upper : Ring::lower, j);
        centers.push_back({{"ring", ring == 0 ? "+" : "-"}, {"j", j}, {"x", std::vector<double>(x.begin(), x.end())}});
      }
    emit(rc, dump({{"schema", kSchema},
                   {"configuration", config_json(rc)},
                   {"min_half_separation", min_half_separation(cfg)},
                   {"symmetry_deviation", sym},
                   {"symmetry_tolerance", 1e-12},
                   {"centers", centers}}));
  }
  if (!(sym < 1e-12)) throw CheckFailure{10, "ansatz symmetry deviation " + std::to_string(sym)};
}

void run_sums(const RunConfig& rc, std::vector<int> ks) {
  require_format(rc, {"csv"});
  if (ks.empty()) ks = {rc.k};
  struct Kind {
    RingKind ring;
    SumWeight weight;
    double alpha;
    const char* ring_name;
    const char* weight_name;
  };
  const int N = rc.N;
  const std::vector<Kind> kinds{{RingKind::same, SumWeight::one, N - 2.0, "same", "one"},
                                {RingKind::cross, SumWeight::one, N - 2.0, "cross", "one"},
                                {RingKind::same, SumWeight::one_minus_cos, double(N), "same", "one_minus_cos"},
                                {RingKind::cross, SumWeight::one_minus_cos, double(N), "cross", "one_minus_cos"},
                                {RingKind::cross, SumWeight::one, double(N), "cross", "one"}};
  std::ostringstream os;
  os.precision(17);
  os << "k,h,alpha,ring,weight,exact,leading,rel_err,law,regime_warning\n";
  for (int k : ks) {
    for (const auto& kd : kinds) {
      const SumQuery q{N, k, rc.r, rc.h, kd.alpha, kd.ring, kd.weight};
      const double exact = sum_exact(q);
      const AsymptoticResult a = sum_asymptotic(q);
      os << k << ',' << rc.h << ',' << kd.alpha << ',' << kd.ring_name << ',' << kd.weight_name << ',' << exact << ','
         << a.leading << ',' << exact / a.leading - 1.0 << ',' << to_string(a.law) << ',' << a.regime_warning << '\n';
    }
  }
  emit(rc, os.str());
}

void run_pairwise(const RunConfig& rc, std::vector<double> ds) {
  require_format(rc, {"csv", "json"});
  if (ds.empty()) ds = {10, 20, 40, 80};
  const QuadratureSpec q = rc.quad();
  const double B0 = eval_constants(rc.N).B0;
  Point x1(static_cast<std::size_t>(rc.N), 0.0);
  double worst_ibp = 0.0;
  std::vector<std::vector<double>> rows;
  for (double d : ds) {
    if (!(d >= 0)) throw ConfigError("d-list", "distances must be nonnegative");
    Point x2 = x1;
    x2[0] = d;
    const PairIntegrals p = pair_interaction(x1, x2, rc.mu, q);
    const double ibp = std::abs(p.int_grad - p.int_pow) / std::abs(p.int_pow);
    worst_ibp = std::max(worst_ibp, ibp);
    const double md = rc.mu * d;
    rows.push_back({d, p.int_pow, p.err_pow, p.int_l2, p.err_l2, p.int_grad, p.err_grad, ibp,
                    d > 0 ? p.int_pow * std::pow(md, rc.N - 2) / B0 : NAN});
  }
  const std::vector<std::string> header{"d", "int_pow", "err_pow", "int_l2", "err_l2", "int_grad", "err_grad",
                                        "ibp_defect", "ratio_to_B0"};
  if (rc.format == "csv") {
    emit(rc, csv(header, rows));
  } else {
    ordered_json arr = ordered_json::array();
    for (const auto& row : rows) {
      ordered_json o;
      for (std::size_t i = 0; i < header.size(); ++i) o[header[i]] = row[i];
      arr.push_back(o);
    }
    emit(rc, dump({{"schema", kSchema}, {"N", rc.N}, {"mu", rc.mu}, {"rel_tol", q.rel_tol}, {"pairs", arr}}));
  }
  if (!(worst_ibp < 10 * q.rel_tol))
    throw CheckFailure{2, "integration by parts defect " + std::to_string(worst_ibp) + " exceeds 10 rel_tol"};
}

void run_energy(const RunConfig& rc) {
  require_format(rc, {"json"});
  const Configuration cfg = rc.configuration();
  const auto V = rc.make_V();
  const EnergyBreakdown e = direct_energy(cfg, *V, rc.quad(), rc.mc());
  const ReducedValue semi = F_semi(cfg, *V);
  const ReducedValue main = F_main(cfg.N, cfg.k, cfg.r, cfg.h, cfg.mu, *V);
  const double allowed = 3.0 * e.mc_std_err + semi.remainder_budget;
  const double diff = std::abs(e.total - semi.F);
  auto terms = [](const ReducedValue& v) {
    return ordered_json{{"F", v.F},
                        {"constant", v.terms.constant},
                        {"potential", v.terms.potential},
                        {"same_ring", v.terms.same_ring},
                        {"cross_ring", v.terms.cross_ring},
                        {"non_constant", v.terms.non_constant()},
                        {"remainder_budget", v.remainder_budget}};
  };
  ordered_json j{{"schema", kSchema},
                 {"configuration", config_json(rc)},
                 {"direct",
                  {{"self_energy", e.self_energy},
                   {"gradient_diag", e.gradient_diag},
                   {"potential_diag", e.potential_diag},
                   {"potential_cross", e.potential_cross},
                   {"interaction_same", e.interaction_same},
                   {"interaction_cross", e.interaction_cross},
                   {"nonlinear_full", e.nonlinear_full},
                   {"total", e.total},
                   {"non_constant", e.non_constant()},
                   {"mc_std_err", e.mc_std_err},
                   {"mc_rel_std_err", e.mc_rel_std_err},
                   {"mc_samples", e.mc_samples},
                   {"quad_error", e.quad_error},
                   {"max_ibp_defect", e.max_ibp_defect}}},
                 {"semi", terms(semi)},
                 {"main", terms(main)},
                 {"comparison", {{"abs_diff", diff}, {"allowed", allowed}, {"within", diff <= allowed}}},
                 {"tolerances", {{"rel_tol", rc.rel_tol}, {"mc_samples", rc.mc_samples}, {"seed", rc.seed}}}};
  emit(rc, dump(j));
  if (!(diff <= allowed))
    throw CheckFailure{7, "|total - F_semi| = " + std::to_string(diff) + " exceeds " + std::to_string(allowed)};
}

double locate_r0(const RadialPotential& V, CriticalKind want, double r0_flag) {
  if (r0_flag > 0) return r0_flag;
  const auto range = V.declared_range();
  const double lo = std::max(range.lo, 1e-3), hi = std::min(range.hi, 10.0);
  for (const auto& cp : r2v_critical(V, lo, hi, 1e-13))
    if (cp.kind == want) return cp.r0;
  throw ConfigError("potential", std::string("s^2 V(s) has no isolated local ") +
                                     (want == CriticalKind::max ? "maximum" : "minimum") + " in [" +
                                     std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

WidthMode parse_width(const std::string& w) {
  if (w == "fixed") return WidthMode::fixed;
  if (w == "shrinking") return WidthMode::shrinking;
  throw ConfigError("width", "must be fixed or shrinking");
}

ordered_json box_json(const ParameterBox& box) {
  return {{"width", box.width},
          {"mode", box.mode == WidthMode::fixed ? "fixed" : "shrinking"},
          {"exponent_anomaly", box.exponent_anomaly},
          {"r", {box.r_lo(), box.r_hi()}},
          {"h", {box.h_lo(), box.h_hi()}},
          {"mu", {box.mu_lo(), box.mu_hi()}}};
}

void run_reduce(const RunConfig& rc, const std::string& mode, const std::string& width, double r0_flag) {
  require_format(rc, {"json"});
  if (mode != "max" && mode != "minmax") throw ConfigError("mode", "must be max or minmax");
  const auto V = rc.make_V();
  const SolveMode sm = mode == "max" ? SolveMode::max : SolveMode::minmax;
  const double r0 = locate_r0(*V, sm == SolveMode::max ? CriticalKind::max : CriticalKind::min, r0_flag);
  const ParameterBox box = make_boxes(rc.N, rc.k, r0, *V, parse_width(width));
  const double tol = 1e-10;
  ordered_json j{{"schema", kSchema}, {"N", rc.N}, {"k", rc.k}, {"potential", rc.potential}, {"r0", r0},
                 {"mode", mode}, {"box", box_json(box)}};
  try {
    const CriticalPoint cp = solve_critical(rc.N, rc.k, *V, r0, box, sm, tol);
    j["critical_point"] = {{"r_star", cp.r_star},
                           {"h_star", cp.h_star},
                           {"mu_star", cp.mu_star},
                           {"scaled", cp.scaled},
                           {"F", cp.F},
                           {"objective", cp.objective},
                           {"grad_norm", cp.grad_norm},
                           {"grad_tolerance", tol},
                           {"converged", cp.converged},
                           {"margins", {{"r_lo", cp.margins[0]}, {"r_hi", cp.margins[1]}, {"h_lo", cp.margins[2]},
                                        {"h_hi", cp.margins[3]}, {"mu_lo", cp.margins[4]}, {"mu_hi", cp.margins[5]}}},
                           {"h_residual", cp.h_residual},
                           {"mu_residual", cp.mu_residual},
                           {"h_rel_residual", cp.h_rel_residual},
                           {"mu_rel_residual", cp.mu_rel_residual},
                           {"scaling_tolerance", 0.05}};
    emit(rc, dump(j));
    if (!cp.converged) throw CheckFailure{6, "solver did not converge"};
    if (!(cp.h_rel_residual < 0.05 && cp.mu_rel_residual < 0.05))
      throw CheckFailure{6, "scaling residuals h " + std::to_string(cp.h_rel_residual) + ", mu " +
                                std::to_string(cp.mu_rel_residual) + " exceed 5%"};
  } catch (const BoundaryExtremum& b) {
    j["boundary_extremum"] = {{"face", to_string(b.face())}, {"scaled", b.where()}};
    emit(rc, dump(j));
    throw CheckFailure{6, b.what()};
  }
}

void run_flow(const RunConfig& rc, int starts, const std::string& width, double r0_flag, double eta,
              double eta0_fraction, const std::string& traj_path) {
  if (starts < 1) throw ConfigError("starts", "must be at least 1");
  const auto V = rc.make_V();
  const double r0 = locate_r0(*V, CriticalKind::min, r0_flag);
  const ParameterBox box = make_boxes(rc.N, rc.k, r0, *V, parse_width(width));
  FlowSpec spec;
  spec.levels.eta = eta;
  spec.levels.eta0_fraction = eta0_fraction;
  const FlowReport rep = flow_confinement(rc.N, rc.k, *V, random_starts(box, starts, rc.seed), box, spec);
  if (!traj_path.empty()) {
    std::ofstream f(traj_path);
    if (!f) throw ConfigError("trajectories", "cannot write '" + traj_path + "'");
    write_trajectory_csv(f, rep);
  }
  if (rc.format == "csv") {
    std::ostringstream os;
    write_trajectory_csv(os, rep);
    emit(rc, os.str());
  } else {
    require_format(rc, {"json"});
    ordered_json trs = ordered_json::array();
    for (const auto& t : rep.trajectories)
      trs.push_back({{"start", t.start},
                     {"outcome", to_string(t.outcome)},
                     {"exit_face", to_string(t.exit_face)},
                     {"final_level", t.final_level},
                     {"samples", t.samples.size()}});
    emit(rc, dump({{"schema", kSchema},
                   {"N", rc.N},
                   {"k", rc.k},
                   {"potential", rc.potential},
                   {"r0", r0},
                   {"box", box_json(box)},
                   {"t1", rep.t1},
                   {"t2", rep.t2},
                   {"tolerances", {{"abs_tol", spec.abs_tol}, {"rel_tol", spec.rel_tol}, {"eta", eta},
                                   {"eta0_fraction", eta0_fraction}}},
                   {"starts", rep.starts},
                   {"reached_t1", rep.reached_t1},
                   {"exits_r", rep.exits_r},
                   {"exits_h_mu", rep.exits_h_mu},
                   {"stalled", rep.stalled},
                   {"step_underflow", rep.underflow},
                   {"trajectories", trs}}));
  }
  if (rep.exits_h_mu > 0) throw CheckFailure{8, std::to_string(rep.exits_h_mu) + " trajectories left through h/mu faces"};
  if (rep.underflow > 0) throw CheckFailure{8, std::to_string(rep.underflow) + " trajectories hit step underflow"};
}

void run_residual(const RunConfig& rc, std::vector<int> ks, double h_hat, double mu_hat) {
  require_format(rc, {"csv", "json"});
  if (ks.empty()) ks = {8, 16, 32};
  const auto V = rc.make_V();
  const ReductionConstants& c = eval_constants(rc.N);
  if (!(h_hat > 0)) h_hat = c.h0;
  if (!(mu_hat > 0)) mu_hat = c.mu0(rc.r, V->value(rc.r));
  const ResidualScaling sc = residual_scaling(rc.N, ks, rc.r, h_hat, mu_hat, *V, rc.mc());
  if (rc.format == "csv") {
    std::vector<std::vector<double>> rows;
    for (const auto& row : sc.rows)
      rows.push_back({double(row.k), row.norm, row.std_err, row.bound, row.fitted_C, row.interaction_branch,
                      row.potential_branch});
    emit(rc, csv({"k", "norm", "std_err", "bound", "fitted_C", "interaction_branch", "potential_branch"}, rows));
  } else {
    ordered_json arr = ordered_json::array();
    for (const auto& row : sc.rows)
      arr.push_back({{"k", row.k}, {"h", row.h}, {"mu", row.mu}, {"norm", row.norm}, {"std_err", row.std_err},
                     {"bound", row.bound}, {"interaction_branch", row.interaction_branch},
                     {"potential_branch", row.potential_branch}, {"fitted_C", row.fitted_C}});
    emit(rc, dump({{"schema", kSchema},
                   {"N", rc.N},
                   {"r", rc.r},
                   {"h_hat", h_hat},
                   {"mu_hat", mu_hat},
                   {"rows", arr},
                   {"C_geometric_mean", sc.C_geometric_mean},
                   {"C_spread", sc.C_spread},
                   {"spread_tolerance", 3.0},
                   {"tolerances", {{"mc_samples", rc.mc_samples}, {"seed", rc.seed}}}}));
  }
  if (!(sc.C_spread < 3.0)) throw CheckFailure{9, "fitted constant varies by " + std::to_string(sc.C_spread)};
}

int run_report(const RunConfig& rc, bool quick, std::vector<int> only) {
  require_format(rc, {"json"});
  std::vector<int> ids = only;
  if (ids.empty()) ids = quick ? quick_criteria() : std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  for (int id : ids)
    if (id < 1 || id > 10) throw ConfigError("only", "criterion ids run from 1 to 10");
  AcceptanceOptions opt;
  opt.seed = rc.seed;
  opt.threads = rc.threads;
  const auto results = run_battery(ids, opt, [](const CriterionResult& r) {
    std::fprintf(stderr, "criterion %d %s (%.2f s)\n", r.id, r.passed ? "PASS" : "FAIL", r.seconds);
  });
  ordered_json arr = ordered_json::array();
  std::vector<int> failed;
  for (const auto& r : results) {
    ordered_json m = ordered_json::object();
    for (const auto& [k, v] : r.metrics) m[k] = v;
    arr.push_back({{"id", r.id}, {"title", r.title}, {"passed", r.passed}, {"detail", r.detail}, {"metrics", m}});
    if (!r.passed) failed.push_back(r.id);
  }
  emit(rc, dump({{"schema", kSchema}, {"quick", quick}, {"seed", rc.seed}, {"passed", failed.empty()},
                 {"failed", failed}, {"criteria", arr}}));
  if (!failed.empty()) {
    std::string ids_text;
    for (int id : failed) ids_text += (ids_text.empty() ? "" : ", ") + std::to_string(id);
    std::fprintf(stderr, "check failed: criteria %s\n", ids_text.c_str());
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical toolkit for double-tower solutions of the critical Schrodinger equation"};
  app.set_help_flag("--help", "Print this help message and exit");  // -h would collide with --h
  app.require_subcommand(1);
  app.fallthrough();
  RunConfig rc;
  app.add_option("--N", rc.N, "space dimension (>= 5)");
  app.add_option("--k", rc.k, "bubbles per ring");
  app.add_option("--r", rc.r, "ring radius");
  app.add_option("--h", rc.h, "normalized ring height in [0,1)");
  app.add_option("--mu", rc.mu, "concentration parameter");
  app.add_option("--potential", rc.potential, "bump (default) | bump-min (default for flow and minmax) | bump:a=,b=,c=,w= | bn:lambda= | const:value= | table:file.csv");
  app.add_option("--rel-tol", rc.rel_tol, "quadrature relative tolerance");
  app.add_option("--mc-samples", rc.mc_samples, "Monte Carlo samples");
  app.add_option("--seed", rc.seed, "random seed");
  app.add_option("--threads", rc.threads, "worker threads (0: DTOWER_THREADS or hardware)");
  app.add_option("--out", rc.out, "output file (default stdout)");
  app.add_option("--format", rc.format, "json or csv (default: csv for sums, json otherwise)")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--config", rc.config, "INI file; its values override flags");

  auto* constants = app.add_subcommand("constants", "reduction constants with quadrature cross-checks");
  auto* geometry = app.add_subcommand("geometry", "ring centers");
  std::vector<int> sum_ks;
  auto* sums = app.add_subcommand("sums", "exact lattice sums against their leading laws");
  sums->add_option("--k-list", sum_ks, "k values")->delimiter(',');
  std::vector<double> ds;
  auto* pairwise = app.add_subcommand("pairwise", "two-bubble interaction integrals along a distance sweep");
  pairwise->add_option("--d-list", ds, "center distances")->delimiter(',');
  auto* energy = app.add_subcommand("energy", "direct energy of the ansatz against the reduced models");
  std::string mode = "max", width = "fixed";
  double r0 = 0.0;
  auto* reduce = app.add_subcommand("reduce", "critical point of the reduced energy");
  reduce->add_option("--mode", mode, "max or minmax");
  reduce->add_option("--width", width, "fixed or shrinking");
  reduce->add_option("--r0", r0, "critical radius of s^2 V (default: located automatically)");
  int starts = 10;
  double eta = 0.05, eta0 = 0.1;
  std::string flow_width = "fixed", traj;
  auto* flow = app.add_subcommand("flow", "gradient-flow confinement study (minimum case)");
  flow->add_option("--starts", starts, "number of seeded starts");
  flow->add_option("--width", flow_width, "fixed or shrinking");
  flow->add_option("--r0", r0, "critical radius of s^2 V");
  flow->add_option("--eta", eta, "slack in the lower level t1");
  flow->add_option("--eta0-fraction", eta0, "eta0 as a fraction of A1 in the upper level t2");
  flow->add_option("--trajectories", traj, "CSV file for (trajectory, t, r, h, mu, F)");
  std::vector<int> res_ks;
  double h_hat = 0.0, mu_hat = 0.0;
  auto* residual = app.add_subcommand("residual", "residual norm along the scaling path");
  residual->add_option("--k-list", res_ks, "k values")->delimiter(',');
  residual->add_option("--h-hat", h_hat, "scaled height (default h0)");
  residual->add_option("--mu-hat", mu_hat, "scaled concentration (default mu0)");
  bool quick = false;
  std::vector<int> only;
  auto* report = app.add_subcommand("report", "acceptance battery as one JSON summary");
  report->add_flag("--quick", quick, "fast subset");
  report->add_option("--only", only, "criterion ids")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    apply_config_file(rc);
    if (rc.potential.empty()) rc.potential = (*flow || (*reduce && mode == "minmax")) ? "bump-min" : "bump";
    if (rc.format.empty()) rc.format = *sums ? "csv" : "json";
    if (*constants) run_constants(rc);
    if (*geometry) run_geometry(rc);
    if (*sums) run_sums(rc, sum_ks);
    if (*pairwise) run_pairwise(rc, ds);
    if (*energy) run_energy(rc);
    if (*reduce) run_reduce(rc, mode, width, r0);
    if (*flow) run_flow(rc, starts, flow_width, r0, eta, eta0, traj);
    if (*residual) run_residual(rc, res_ks, h_hat, mu_hat);
    if (*report) return run_report(rc, quick, only);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const domain_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const CheckFailure& f) {
    std::fprintf(stderr, "check failed: criterion %d: %s\n", f.criterion, f.what.c_str());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
