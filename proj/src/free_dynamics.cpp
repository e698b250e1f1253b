#include "newtonscat/free_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "newtonscat/errors.hpp"

namespace newtonscat {

const char* to_string(FlowSign sign) { return sign == FlowSign::kPlus ? "plus" : "minus"; }

Vec Trajectory::position_at(double t) const {
  if (grid) return grid->interpolate(positions, t);
  if (times.empty()) throw UsageError("empty trajectory");
  auto it = std::upper_bound(times.begin(), times.end(), t);
  std::size_t k = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
  k = std::min(k, times.size() - 2);
  const double h = times[k + 1] - times[k];
  const double s = (t - times[k]) / h;
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
  return h00 * positions.col(k) + h10 * h * velocities.col(k) + h01 * positions.col(k + 1) +
         h11 * h * velocities.col(k + 1);
}

void Trajectory::write_csv(std::ostream& out) const {
  const int n = dim();
  out << "t";
  for (int k = 0; k < n; ++k) out << ",x" << k + 1;
  for (int k = 0; k < n; ++k) out << ",v" << k + 1;
  out << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < times.size(); ++i) {
    out << times[i];
    for (int k = 0; k < n; ++k) out << ',' << positions(k, i);
    for (int k = 0; k < n; ++k) out << ',' << velocities(k, i);
    out << '\n';
  }
}

Path FreeFlow::positions() const {
  Path p = deviation;
  for (std::size_t i = 0; i < grid->size(); ++i) p.col(i) += origin + grid->time(i) * w;
  return p;
}

Vec FreeFlow::position_at(double t) const { return origin + t * w + grid->interpolate(deviation, t); }

Vec FreeFlow::velocity_at(double t) const { return w + grid->interpolate(rate, t); }

Trajectory FreeFlow::trajectory() const {
  Trajectory tr;
  tr.times = grid->times();
  tr.positions = positions();
  tr.velocities = rate;
  tr.velocities.colwise() += w;
  tr.grid = grid;
  tr.diagnostics = diagnostics;
  return tr;
}

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

double free_margin(double x_norm, double h_norm) { return 1.0 + x_norm / kSqrt2 - h_norm; }

// Applies the free-flow integral operator to `dev`, writing the image.
void apply_free_operator(const ForceField& field, const FreeFlow& flow, const Path& dev, Path& out,
                         Path& out_edges, Path& out_rate) {
  const TimeGrid& grid = *flow.grid;
  const int n = flow.dim();
  Path g(n, grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    g.col(i) = field.long_force(Vec(flow.origin + grid.time(i) * flow.w + dev.col(i)));
  if (flow.sign == FlowSign::kPlus) {
    const Path inner = grid.cumulative_backward(g);
    out = -grid.cumulative_from_zero(inner, &out_edges);
    out_edges = -out_edges;
    out_rate = -inner;
  } else {
    const Path inner = grid.cumulative_forward(g);
    out = grid.cumulative_from_zero(inner, &out_edges);
    out_rate = inner;
  }
}

double weighted_sup(const TimeGrid& grid, const Path& diff) {
  double s = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    s = std::max(s, diff.col(i).norm() / std::abs(grid.time(i)));
  return s;
}

FreeFlow make_flow(const Vec& w, const Vec& x, const Vec& h, FlowSign sign,
                   std::shared_ptr<const TimeGrid> grid) {
  FreeFlow flow;
  flow.grid = std::move(grid);
  flow.sign = sign;
  flow.origin = x + h;
  flow.w = w;
  const auto nodes = static_cast<Eigen::Index>(flow.grid->size());
  flow.deviation = Path::Zero(w.size(), nodes);
  flow.deviation_edges = Path::Zero(w.size(), static_cast<Eigen::Index>(flow.grid->panels() + 1));
  flow.rate = Path::Zero(w.size(), nodes);
  return flow;
}

void finish_diagnostics(const DecayProfile& profile, FreeFlow& flow, double speed, double x_norm,
                        double h_norm) {
  const TimeGrid& grid = *flow.grid;
  const double margin = free_margin(x_norm, h_norm);
  const double c = speed / (2.0 * kSqrt2);
  const double far = std::max(-grid.t_min(), grid.t_max());
  flow.diagnostics.tail_error = std::sqrt(static_cast<double>(profile.dim)) * profile.beta1_long() *
                                std::pow(margin + c * far, -profile.alpha) / (profile.alpha * c);
  const double cprime = deviation_constant(profile, speed, x_norm, h_norm);
  flow.diagnostics.deviation_constant = cprime;
  double ratio = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double dev = flow.deviation.col(i).norm();
    if (dev == 0.0) continue;
    ratio = std::max(ratio, cprime > 0.0 ? dev / (cprime * std::abs(grid.time(i)))
                                         : std::numeric_limits<double>::infinity());
  }
  flow.diagnostics.deviation_ratio = ratio;
}

// (A^e - B^e) / e, continuous at e = 0.
double power_difference(double a, double b, double e) {
  const double l = std::log(a / b);
  if (std::abs(e) < 1e-300) return l;
  return std::pow(b, e) * std::expm1(e * l) / e;
}

}  // namespace

double deviation_constant(const DecayProfile& profile, double speed, double x_norm, double h_norm) {
  return std::pow(2.0, 2.5) * std::sqrt(static_cast<double>(profile.dim)) * profile.beta1_long() /
         (profile.alpha * speed * std::pow(free_margin(x_norm, h_norm), profile.alpha));
}

void check_free_admissible(const DecayProfile& profile, const Vec& w, const Vec& v, const Vec& x,
                           const Vec& h) {
  const double vn = v.norm();
  if (!(vn > 0.0)) throw InfeasibleError("speed", "reference velocity must be nonzero");
  if ((w - v).norm() > vn / (4.0 * kSqrt2) * (1.0 + 1e-12))
    throw InfeasibleError("velocity offset",
                          "free flow needs |w - v| <= |v|/(4 sqrt2)");
  const double margin = free_margin(x.norm(), h.norm());
  if (!(margin > 0.0))
    throw InfeasibleError("offset", "free flow needs |h| < 1 + |x|/sqrt2");
  const double lhs = 32.0 * profile.dim * std::max(profile.beta1_long(), profile.beta2_long()) /
                     (profile.alpha * vn * vn * std::pow(margin, profile.alpha));
  if (lhs > 1.0) {
    std::ostringstream msg;
    msg << "free flow needs 32 n max(beta1_long, beta2_long) / (alpha |v|^2 (1+|x|/sqrt2-|h|)^alpha)"
        << " <= 1, got " << lhs;
    throw InfeasibleError("free speed", msg.str());
  }
}

FreeFlow solve_free(const ForceField& field, const Vec& w, const Vec& x, const Vec& h,
                    const FreeFlowConfig& cfg, std::shared_ptr<const TimeGrid> grid,
                    const std::optional<Vec>& v) {
  if (!grid) throw UsageError("solve_free needs a time grid");
  const int n = field.dim();
  if (w.size() != n || x.size() != n || h.size() != n) throw DomainError("dimension mismatch");
  if (!w.allFinite() || !x.allFinite() || !h.allFinite()) throw DomainError("non-finite input");
  if (!(cfg.picard_tol > 0.0) || cfg.max_iter < 1) throw UsageError("invalid free-flow config");
  const Vec vref = v.value_or(w);
  check_free_admissible(field.profile(), w, vref, x, h);

  FreeFlow flow = make_flow(w, x, h, cfg.sign, std::move(grid));
  Path next, next_edges, next_rate;
  if (cfg.backend == FreeBackend::kIterateN) {
    double alpha_used = 0.0;
    bool perturbed = false;
    const int order =
        cfg.iterate_order > 0 ? cfg.iterate_order : iterate_count(field.profile().alpha, &alpha_used, &perturbed);
    if (perturbed) flow.diagnostics.warnings.push_back("alpha = 1/m nudged by -1e-12");
    for (int m = 0; m <= order; ++m) {
      apply_free_operator(field, flow, flow.deviation, next, next_edges, next_rate);
      flow.diagnostics.residual = weighted_sup(*flow.grid, next - flow.deviation);
      flow.diagnostics.residual_history.push_back(flow.diagnostics.residual);
      flow.deviation.swap(next);
      flow.deviation_edges.swap(next_edges);
      flow.rate.swap(next_rate);
    }
    flow.diagnostics.iterations = order + 1;
  } else {
    bool converged = field.long_part().is_zero();
    for (int k = 1; k <= cfg.max_iter && !converged; ++k) {
      apply_free_operator(field, flow, flow.deviation, next, next_edges, next_rate);
      const double res = weighted_sup(*flow.grid, next - flow.deviation);
      flow.diagnostics.residual_history.push_back(res);
      flow.diagnostics.residual = res;
      flow.diagnostics.iterations = k;
      flow.deviation.swap(next);
      flow.deviation_edges.swap(next_edges);
      flow.rate.swap(next_rate);
      converged = res <= cfg.picard_tol;
    }
    if (!converged)
      throw ConvergenceError("free-flow Picard iteration did not reach tolerance",
                             flow.diagnostics.residual_history);
  }
  finish_diagnostics(field.profile(), flow, vref.norm(), x.norm(), h.norm());
  return flow;
}

int iterate_count(double alpha, double* alpha_used, bool* perturbed) {
  if (!(alpha > 0.0) || alpha > 1.0) throw DomainError("alpha must lie in (0, 1]");
  double a = alpha;
  bool nudged = false;
  const double inv = 1.0 / alpha;
  if (std::abs(inv - std::round(inv)) < 1e-9) {
    a = alpha - 1e-12;
    nudged = true;
  }
  if (alpha_used) *alpha_used = a;
  if (perturbed) *perturbed = nudged;
  return static_cast<int>(std::floor(1.0 / a));
}

double final_increment_bound(const DecayProfile& profile, int order, double alpha, double speed,
                             double x_norm, double h_norm) {
  const double n = profile.dim;
  const int N = order;
  double prod = 1.0;
  for (int j = 1; j <= N + 1; ++j) prod *= j * std::abs(1.0 - j * alpha);
  const double margin = free_margin(x_norm, h_norm);
  return std::pow(2.0, 3.0 * (N + 1)) * std::pow(n, N + 0.5) * std::pow(profile.beta2_long(), N) *
         profile.beta1_long() /
         (std::pow(alpha, N + 1) * std::pow(speed, 2.0 * N + 2.0) * prod *
          std::pow(margin, (N + 1) * alpha - 1.0));
}

FreeIterates free_iterates(const ForceField& field, const Vec& w, const Vec& x, const Vec& h,
                           int order, FlowSign sign, std::shared_ptr<const TimeGrid> grid,
                           const std::optional<Vec>& v) {
  if (!grid) throw UsageError("free_iterates needs a time grid");
  const Vec vref = v.value_or(w);
  check_free_admissible(field.profile(), w, vref, x, h);
  FreeIterates out;
  IterateReport& rep = out.report;
  const int natural = iterate_count(field.profile().alpha, &rep.alpha_used, &rep.alpha_perturbed);
  rep.order = order > 0 ? order : natural;
  const int N = rep.order;

  out.flows.push_back(make_flow(w, x, h, sign, grid));
  for (int m = 0; m <= N; ++m) {
    FreeFlow next = out.flows.back();
    apply_free_operator(field, out.flows.back(), out.flows.back().deviation, next.deviation,
                        next.deviation_edges, next.rate);
    next.diagnostics.iterations = m + 1;
    out.flows.push_back(std::move(next));
  }

  const DecayProfile& prof = field.profile();
  const double a = rep.alpha_used;
  const double n = prof.dim;
  const double speed = vref.norm();
  const double margin = free_margin(x.norm(), h.norm());
  const double c = speed / (2.0 * kSqrt2);
  const double cprime = deviation_constant(prof, speed, x.norm(), h.norm());
  const bool plus = sign == FlowSign::kPlus;
  auto on_side = [&](double t) { return plus ? t >= 0.0 : t <= 0.0; };
  auto ratio = [](double obs, double bound) {
    if (obs == 0.0) return 0.0;
    return bound > 0.0 ? obs / bound : std::numeric_limits<double>::infinity();
  };

  for (int m = 1; m <= N + 1; ++m) {
    double r = 0.0;
    const FreeFlow& f = out.flows[m];
    for (std::size_t i = 0; i < grid->size(); ++i)
      r = std::max(r, ratio(f.deviation.col(i).norm(), cprime * std::abs(grid->time(i))));
    finish_diagnostics(prof, out.flows[m], speed, x.norm(), h.norm());
    rep.deviation_ratio.push_back(r);
  }
  for (int m = 0; m <= N - 1; ++m) {
    double prod = 1.0;
    for (int j = 1; j <= m; ++j) prod *= 1.0 - j * a;
    double fact = 1.0;
    for (int j = 2; j <= m + 1; ++j) fact *= j;
    const double k = std::pow(2.0, 3.0 * (m + 1)) * std::pow(n, m + 0.5) *
                     std::pow(prof.beta2_long(), m) * prof.beta1_long() /
                     (std::pow(a, m + 1) * std::pow(speed, 2.0 * m + 2.0) * fact * prod);
    const double e = 1.0 - (m + 1) * a;
    double r = 0.0;
    for (std::size_t i = 0; i < grid->size(); ++i) {
      const double t = grid->time(i);
      if (!on_side(t)) continue;
      const double bound = k * power_difference(margin + std::abs(t) * c, margin, e);
      r = std::max(r, ratio((out.flows[m + 1].deviation.col(i) - out.flows[m].deviation.col(i)).norm(),
                            bound));
    }
    rep.increment_ratio.push_back(r);
  }
  for (int m = 1; m <= N; ++m) {
    const double k = std::pow(2.0, 4.0 * m + 2.5) * std::pow(n, m + 0.5) *
                     std::pow(prof.beta2_long(), m) * prof.beta1_long() /
                     (std::pow(a, m + 1) * std::pow(speed, 2.0 * m + 1.0) *
                      std::pow(margin, (m + 1) * a));
    double r = 0.0;
    for (std::size_t i = 0; i < grid->size(); ++i)
      r = std::max(r, ratio((out.flows[m + 1].deviation.col(i) - out.flows[m].deviation.col(i)).norm(),
                            k * std::abs(grid->time(i))));
    rep.linear_increment_ratio.push_back(r);
  }
  rep.final_increment_bound = final_increment_bound(prof, N, a, speed, x.norm(), h.norm());
  double r = 0.0;
  for (std::size_t i = 0; i < grid->size(); ++i) {
    if (!on_side(grid->time(i))) continue;
    r = std::max(r, ratio((out.flows[N + 1].deviation.col(i) - out.flows[N].deviation.col(i)).norm(),
                          rep.final_increment_bound));
  }
  rep.final_increment_ratio = r;

  const double slack = 1.0 + 1e-9;
  rep.pass = rep.final_increment_ratio <= slack;
  for (double q : rep.deviation_ratio) rep.pass = rep.pass && q <= slack;
  for (double q : rep.increment_ratio) rep.pass = rep.pass && q <= slack;
  for (double q : rep.linear_increment_ratio) rep.pass = rep.pass && q <= slack;
  return out;
}

BoundednessReport check_boundedness_vs_free(const Trajectory& x_traj, const Trajectory& z_traj) {
  if (x_traj.times.size() != z_traj.times.size() || x_traj.dim() != z_traj.dim())
    throw UsageError("trajectories do not share a grid");
  for (std::size_t i = 0; i < x_traj.times.size(); ++i) {
    const double a = x_traj.times[i], b = z_traj.times[i];
    if (std::abs(a - b) > 1e-12 * (1.0 + std::abs(a))) throw UsageError("trajectories do not share a grid");
  }
  BoundednessReport rep;
  std::vector<double> diffs;
  for (std::size_t i = 0; i < x_traj.times.size(); ++i) {
    if (x_traj.times[i] <= 0.0) continue;
    const double d = (x_traj.positions.col(i) - z_traj.positions.col(i)).norm();
    diffs.push_back(d);
    rep.sup_difference = std::max(rep.sup_difference, d);
  }
  if (diffs.size() >= 2) {
    const std::size_t tail = std::max<std::size_t>(2, diffs.size() / 10);
    const double first = diffs[diffs.size() - tail], last = diffs.back();
    rep.growth = last - first > 0.01 * last + 1e-12;
  }
  return rep;
}

}  // namespace newtonscat
