// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "newtonscat/estimates.hpp"
#include "newtonscat/free_dynamics.hpp"
#include "newtonscat/high_energy.hpp"
#include "newtonscat/oracle.hpp"
#include "newtonscat/reconstruction.hpp"
#include "newtonscat/scattering.hpp"
#include "newtonscat/xray.hpp"
#include "test_support.hpp"

using namespace newtonscat;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

constexpr Flavor kSolverFlavors[] = {Flavor::kStandard, Flavor::kModified, Flavor::kIterateN};

Outcome zero_field_identity() {
  const ForceField f = builtin_field("zero");
  const Vec v = make_vec({3.0, 0.0}), x = make_vec({0.0, 0.5});
  double worst = 0.0;
  for (Flavor fl : kSolverFlavors) {
    const IncomingOperator op(f, v, x, fl);
    const IncomingSolution sol = solve_y_minus(op);
    worst = std::max(worst, sol.y_minus.values.cwiseAbs().maxCoeff());
    const ScatteringDatum d = assemble_scattering_data(op, sol);
    worst = std::max({worst, d.a_sc.norm(), d.b_sc.norm()});
    if (fl == Flavor::kModified) {
      const ModifiedMap G(op, sol.y_minus);
      worst = std::max(worst, G(zero_vec(2)).norm());
      worst = std::max(worst, solve_b_tilde(op, sol.y_minus).b_tilde_sc.norm());
    }
    worst = std::max(worst, op.incoming_flow().deviation.cwiseAbs().maxCoeff());
  }
  const OracleResult o = oracle_scattering(f, v, x);
  worst = std::max({worst, o.datum.a_sc.norm(), o.datum.b_sc.norm()});
  double straight = 0.0;
  for (std::size_t i = 0; i < o.trajectory.size(); ++i) {
    const Vec line = x + o.trajectory.times[i] * v;
    straight = std::max(straight, (Vec(o.trajectory.positions.col(static_cast<Eigen::Index>(i))) - line).norm() /
                                      (1.0 + line.norm()));
  }
  worst = std::max(worst, straight);
  return {worst <= 1e-12, fmt("max deviation %.2e (solver, modified map, oracle)", worst)};
}

Outcome gradient_consistency() {
  double worst = 0.0;
  for (const auto& name : builtin_field_names())
    worst = std::max(worst, gradient_consistency_error(builtin_field(name), 100, 1.0));
  return {worst <= 1e-6, fmt("max rel. err %.2e over %g fields x 100 points", worst,
                             static_cast<double>(builtin_field_names().size()))};
}

Outcome free_flow_contraction() {
  gen::Rng rng(101);
  const std::vector<std::string> fields{"demo", "fractional", "long_only", "coulomb_like", "anisotropic"};
  double worst_ratio = 0.0, worst_dev = 0.0;
  for (int k = 0; k < 10; ++k) {
    const ForceField f = builtin_field(fields[static_cast<std::size_t>(k) % fields.size()]);
    const Vec theta = gen::random_unit(rng, 2);
    const Vec x = gen::random_perp(rng, theta, 1.5);
    const double speed = gen::uniform(rng, 1.05, 3.0) * mu_of_sigma(f.profile(), x.norm());
    const Vec h = gen::random_unit(rng, 2) * gen::uniform(rng, 0.0, 0.3);
    FreeFlowConfig fc;
    fc.sign = FlowSign::kPlus;
    fc.picard_tol = 1e-14;
    const FreeFlow z =
        solve_free(f, speed * theta, x, h, fc, make_scatter_grid(speed, f.profile().alpha, ScatterConfig{}));
    const auto& hist = z.diagnostics.residual_history;
    for (std::size_t i = 0; i + 1 < hist.size(); ++i) {
      if (hist[i + 1] < 1e-12 * hist.front()) break;
      worst_ratio = std::max(worst_ratio, hist[i + 1] / hist[i]);
    }
    worst_dev = std::max(worst_dev, z.diagnostics.deviation_ratio);
  }
  return {worst_ratio <= 0.5 && worst_dev <= 1.0,
          fmt("max residual ratio %.3f (<= 0.5), max deviation/bound %.3f (<= 1)", worst_ratio, worst_dev)};
}

Outcome operator_contraction() {
  const ForceField f = builtin_field("demo");
  gen::Rng rng(202);
  double worst_l = 0.0, worst_r = 0.0;
  for (Flavor fl : kSolverFlavors)
    for (int k = 0; k < 100; ++k) {
      const auto in = gen::admissible_input(f, rng, gen::uniform(rng, 1.2, 4.0), 1.5, fl);
      const IncomingOperator op(f, in.v, in.x, fl);
      const double r = default_radius(op.x_minus().norm(), fl == Flavor::kModified);
      const BoundConstants c = bound_constants(f.profile(), op.x_minus().norm(), in.v.norm(), r);
      const double rho = fl == Flavor::kModified ? c.rho_tilde : c.rho;
      const MrFunction f1 = gen::random_mr(rng, op.grid(), 2, r, in.v.norm());
      const MrFunction f2 = gen::random_mr(rng, op.grid(), 2, r, in.v.norm());
      const MrFunction a1 = op.apply(f1), a2 = op.apply(f2);
      worst_l = std::max(worst_l, gen::difference(a1, a2).norm() / (c.lambda * gen::difference(f1, f2).norm()));
      worst_r = std::max({worst_r, a1.norm() / rho, a2.norm() / rho});
    }
  return {worst_l <= 1.0 && worst_r <= 1.0,
          fmt("max |Af1-Af2|/(lambda|f1-f2|) %.3f, max |Af|/rho %.3f over 300 pairs", worst_l, worst_r)};
}

Outcome energy_conservation() {
  const ForceField f = builtin_field("demo");
  gen::Rng rng(303);
  double worst = 0.0, worst_drift = 0.0;
  int data = 0;
  for (int k = 0; k < 20; ++k) {
    const auto in = gen::admissible_input(f, rng, gen::uniform(rng, 1.5, 6.0), 1.5, Flavor::kModified);
    for (Flavor fl : kSolverFlavors) {
      worst = std::max(worst, scatter(f, in.v, in.x, fl).energy_error);
      ++data;
    }
    if (k < 5) {
      const OracleResult o = oracle_scattering(f, in.v, in.x);
      const double e = std::abs(f.energy(o.trajectory.positions.col(0), o.trajectory.velocities.col(0)));
      // Integrator tolerance: accumulated relative tolerance over the run.
      worst_drift = std::max(worst_drift, o.energy_drift / (1e3 * OracleConfig{}.rel_tol * e));
    }
  }
  return {worst <= 1e-8 && worst_drift <= 1.0,
          fmt("max ||a|-|v||/|v| %.2e over %g data, oracle drift/tolerance %.2e", worst,
              static_cast<double>(data), worst_drift)};
}

Outcome solver_oracle_agreement() {
  const ForceField f = builtin_field("demo");
  gen::Rng rng(404);
  double ea = 0.0, eb = 0.0, esc = 0.0;
  for (int k = 0; k < 20; ++k) {
    const auto in = gen::admissible_input(f, rng, gen::uniform(rng, 2.0, 4.0), 1.5);
    const ScatteringDatum s = scatter(f, in.v, in.x, Flavor::kStandard);
    const OracleResult o = oracle_scattering(f, in.v, in.x);
    if (o.captured) return {false, "oracle reported capture"};
    ea = std::max(ea, (s.a - o.datum.a).norm() / o.datum.a.norm());
    eb = std::max(eb, (s.b - o.datum.b).norm() / o.datum.b.norm());
    esc = std::max(esc, (s.a_sc - o.datum.a_sc).norm() / o.datum.a_sc.norm());
  }
  return {ea <= 1e-5 && eb <= 1e-5, fmt("max rel. err a %.2e, b %.2e (a_sc %.2e)", ea, eb, esc)};
}

Outcome theorem_bounds() {
  const ForceField f = builtin_field("demo");
  const LineParam line = LineParam::planar(0.4, 0.5);
  bool all = true;
  double worst = 0.0;
  std::vector<double> s_std, t3;
  for (Flavor fl : {Flavor::kStandard, Flavor::kModified})
    for (double factor : {2.0, 4.0, 8.0}) {
      const double s = factor * line_threshold(f, line.x.norm(), fl);
      const TheoremReport r = verify_theorem_bounds(f, line, s, fl);
      all = all && r.pass;
      for (const auto& c : r.checks) worst = std::max(worst, c.lhs / c.rhs);
      if (fl == Flavor::kStandard) {
        s_std.push_back(s);
        t3.push_back(r.checks.at(0).lhs);
      }
    }
  const double slope = loglog_slope(s_std, t3);
  const bool slope_ok = std::abs(slope + 2.0) <= 0.3;
  return {all && slope_ok, std::string(all ? "inequalities hold" : "inequalities violated") +
                               fmt(" (max LHS/RHS %.2e); t3 LHS log-log slope %.2f (target -2 +- 0.3)", worst, slope)};
}

Outcome high_energy_limits() {
  const ForceField f = builtin_field("demo");
  double ea = 0.0, eb = 0.0;
  for (Flavor fl : {Flavor::kStandard, Flavor::kModified})
    for (int k = 0; k < 10; ++k) {
      const LineParam line = LineParam::planar(0.3 + 0.61 * k, -1.0 + 0.2 * k);
      const double s0 = line_threshold(f, line.x.norm(), fl);
      const SweepResult r = high_energy_sweep(f, line, {2 * s0, 4 * s0, 8 * s0}, fl);
      ea = std::max(ea, r.a_rel_error);
      eb = std::max(eb, r.b_rel_error);
    }
  return {ea <= 1e-3 && eb <= 1e-3, fmt("max rel. err vs PF/PF^s %.2e, vs -PV^s %.2e (20 sweeps)", ea, eb)};
}

Outcome g_contraction() {
  const ForceField f = builtin_field("demo");
  gen::Rng rng(909);
  double worst_c = 0.0, worst_ball = 0.0;
  for (int k = 0; k < 20; ++k) {
    const auto in = gen::admissible_input(f, rng, gen::uniform(rng, 1.5, 4.0), 2.0, Flavor::kModified);
    const ScatteringDatum d = scatter(f, in.v, in.x, Flavor::kModified);
    const double ball = 0.25 + d.x_minus.norm() / std::pow(2.0, 2.5);
    worst_c = std::max(worst_c, d.g_contraction);
    worst_ball = std::max(worst_ball, d.b_sc.norm() / ball);
  }
  return {worst_c <= 0.1 && worst_ball <= 1.0,
          fmt("max measured ratio %.2e (<= 0.1), max |b~_sc|/radius %.2e", worst_c, worst_ball)};
}

Outcome xray_round_trip() {
  const Vec c = make_vec({0.4, -0.3});
  auto bump = [&](const Vec& y) { return std::exp(-(y - c).squaredNorm() / 0.5); };
  const Sinogram s = sample_sinogram(bump, 50.0, 180, 257, 3.0);
  const ReconGrid g{128, 2.1};
  const FbpResult r = invert_fbp_2d(s, g);
  const auto truth = sample_on_grid([&](const Vec& y) { return Vec::Constant(1, bump(y)); }, 1, g);
  const double err = relative_l2(r.values, truth);
  return {err <= 0.02, fmt("rel. L2 %.2e (180 x 257 sinogram, 128^2 grid)", err)};
}

Outcome end_to_end_reconstruction() {
  const ForceField f = builtin_field("demo");
  ReconstructionSpec spec;  // 90 x 129 lines, 128^2 grid, factors {2, 4}, two-point extrapolation
  const ReconstructionResult main = reconstruct_short_range(f, spec);
  // Doubling s_max on the raw (unextrapolated) data isolates the part of the
  // error that comes from finite speed.
  ReconstructionSpec raw = spec;
  raw.extrapolation_order = 0;
  raw.ladder_factors = {4.0};
  const ReconstructionResult lo = reconstruct_short_range(f, raw);
  raw.ladder_factors = {8.0};
  const ReconstructionResult hi = reconstruct_short_range(f, raw);
  const bool ok = main.field_error <= 0.1 && hi.data_error < lo.data_error;
  char buf[400];
  std::snprintf(buf, sizeof buf,
                "F^s rel. L2 %.2e (floor %.2e, s_max %.0f); raw data error %.2e -> %.2e as s_max doubles "
                "(field error %.6e -> %.6e)",
                main.field_error, main.inversion_floor, main.s_max, lo.data_error, hi.data_error, lo.field_error,
                hi.field_error);
  return {ok, buf};
}

Outcome iterate_fidelity() {
  // Fractional tail, alpha = 3/4, N = 1.
  const ForceField strong = builtin_field("fractional");
  const ForceField weak = builtin_field("fractional_weak");
  const int order = iterate_count(strong.profile().alpha);
  gen::Rng rng(1212);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const Vec theta = gen::random_unit(rng, 2);
    const Vec x = gen::random_perp(rng, theta, 1.5);
    const double speed = gen::uniform(rng, 1.5, 4.0) * mu_of_sigma(strong.profile(), x.norm());
    const auto grid = make_scatter_grid(speed, strong.profile().alpha, ScatterConfig{});
    for (FlowSign sign : {FlowSign::kPlus, FlowSign::kMinus}) {
      FreeFlowConfig fc;
      fc.sign = sign;
      fc.picard_tol = 1e-15;
      const FreeFlow exact = solve_free(strong, speed * theta, x, zero_vec(2), fc, grid);
      const FreeIterates it = free_iterates(strong, speed * theta, x, zero_vec(2), order, sign, grid);
      const FreeFlow& last = it.flows.back();
      for (std::size_t i = 0; i < grid->size(); ++i) {
        const double t = grid->time(i);
        if ((sign == FlowSign::kPlus) != (t >= 0.0)) continue;
        const auto col = static_cast<Eigen::Index>(i);
        worst = std::max(worst, (last.deviation.col(col) - exact.deviation.col(col)).norm() /
                                    it.report.final_increment_bound);
      }
    }
  }
  // iterate_N data approach the standard data when the constants shrink 4x.
  double gap_strong = 0.0, gap_weak = 0.0;
  bool shrinks = true;
  for (int k = 0; k < 5; ++k) {
    const auto in = gen::admissible_input(strong, rng, gen::uniform(rng, 2.0, 4.0), 1.0);
    auto gap = [&](const ForceField& f) {
      const ScatteringDatum s = scatter(f, in.v, in.x, Flavor::kStandard);
      const ScatteringDatum n = scatter(f, in.v, in.x, Flavor::kIterateN);
      // a and b coincide up to discretization; the flavor shows in the
      // breakdown of b_sc and in W.
      return (s.a - n.a).norm() + (s.b - n.b).norm() + (s.l - n.l).norm() + (s.l1 - n.l1).norm() +
             (s.l2 - n.l2).norm() + (compute_W(f, s).value - compute_W(f, n).value).norm();
    };
    const double gs = gap(strong), gw = gap(weak);
    shrinks = shrinks && gw < gs;
    gap_strong = std::max(gap_strong, gs);
    gap_weak = std::max(gap_weak, gw);
  }
  return {worst <= 2.0 && shrinks,
          fmt("max |z_N+1 - z|/bound %.2e (<= 2); iterate vs standard gap %.2e -> %.2e with beta / 4", worst,
              gap_strong, gap_weak)};
}

}  // namespace

// Optional arguments restrict the run to the listed criterion numbers.
int main(int argc, char** argv) {
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "zero-field identity", 1, zero_field_identity},
      {2, "gradient consistency", 1, gradient_consistency},
      {3, "free-flow contraction", 10, free_flow_contraction},
      {4, "operator contraction", 60, operator_contraction},
      {5, "energy conservation", 30, energy_conservation},
      {6, "solver/oracle agreement", 300, solver_oracle_agreement},
      {7, "theorem-bound satisfaction", 300, theorem_bounds},
      {8, "high-energy limits", 600, high_energy_limits},
      {9, "outgoing map contraction", 60, g_contraction},
      {10, "X-ray round trip", 30, xray_round_trip},
      {11, "end-to-end reconstruction", 1800, end_to_end_reconstruction},
      {12, "iterate fidelity", 300, iterate_fidelity},
  };
  int failures = 0, ran = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.limit_s;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("%s %2d %s: %s [%.1f s, limit %.0f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                secs, c.limit_s, in_time ? "" : ", over time limit");
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", ran - failures, ran);
  return failures == 0 ? 0 : 1;
}
