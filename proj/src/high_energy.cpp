#include "newtonscat/high_energy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "newtonscat/errors.hpp"
#include "newtonscat/parallel.hpp"
#include "path_forces.hpp"

namespace newtonscat {

double line_threshold(const ForceField& field, double x_norm, Flavor flavor, const ScatterConfig& cfg) {
  if (field.profile().beta_max() == 0.0) return 0.0;
  const bool modified = flavor == Flavor::kModified;
  const double r = cfg.r > 0.0 ? cfg.r : default_radius(x_norm, modified);
  return s_threshold(field.profile(), x_norm, r,
                     modified ? ThresholdVariant::kModified : ThresholdVariant::kStandard);
}

namespace {

double relative_error(double value, double target) {
  const double diff = std::abs(value - target);
  return std::abs(target) > 0.0 ? diff / std::abs(target) : diff;
}

double relative_error(const Vec& value, const Vec& target) {
  const double diff = (value - target).norm();
  return target.norm() > 0.0 ? diff / target.norm() : diff;
}

}  // namespace

TheoremReport verify_theorem_bounds(const ForceField& field, const LineParam& line, double s,
                                    Flavor flavor, const ScatterConfig& cfg) {
  if (flavor != Flavor::kStandard && flavor != Flavor::kModified)
    throw UsageError(std::string("no closed-form high-energy bounds for flavor ") + to_string(flavor));
  const DecayProfile& p = field.profile();
  if (line.theta.size() != p.dim) throw DomainError("line dimension differs from the field");
  const bool modified = flavor == Flavor::kModified;
  const double xn = line.x.norm();

  TheoremReport rep;
  rep.flavor = flavor;
  rep.s = s;
  rep.r = cfg.r > 0.0 ? cfg.r : default_radius(xn, modified);
  rep.threshold = line_threshold(field, xn, flavor, cfg);
  if (!(s > rep.threshold)) {
    std::ostringstream os;
    os << "s = " << s << " is not above the threshold " << (modified ? "s0~" : "s0") << " = " << rep.threshold;
    throw InfeasibleError(modified ? "threshold s0~" : "threshold s0", os.str());
  }

  ScatterConfig c = cfg;
  c.r = rep.r;
  c.radius_halvings = 0;
  c.compute_w = true;
  IncomingOperator op(field, s * line.theta, line.x, flavor, c);
  rep.datum = assemble_scattering_data(op, solve_y_minus(op));
  const ScatteringDatum& d = rep.datum;

  // Straight line tau s theta + x on the solver's grid.
  const TimeGrid& g = *op.grid();
  Path straight(p.dim, static_cast<Eigen::Index>(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i)
    straight.col(static_cast<Eigen::Index>(i)) = g.time(i) * s * line.theta + line.x;
  const Path Fs = detail::short_forces(field, straight);
  const Vec born_b = Vec(past_moment(g, Fs) - future_moment(g, Fs));

  auto add = [&](const char* name, double lhs, double rhs) {
    const bool pass = lhs <= rhs;
    rep.checks.push_back({name, lhs, rhs, pass});
    rep.pass = rep.pass && pass;
  };
  if (!modified) {
    const Vec born_a = Vec(g.integrate(detail::long_forces(field, straight) + Fs));
    add("born_a", (d.a_sc - born_a).norm(), bounds::born_a(p, xn, s, rep.r));
    add("born_b", (d.b_sc - d.w - born_b).norm(), bounds::born_b(p, xn, s, rep.r));
  } else {
    const Vec born_a = Vec(g.integrate(Fs));
    add("modified_born_a", (d.a_sc - d.w - born_a).norm(), bounds::modified_born_a(p, xn, s, rep.r));
    add("modified_born_b", (d.b_sc - born_b).norm(), bounds::modified_born_b(p, xn, s, rep.r));
  }
  return rep;
}

std::vector<double> geometric_ladder(double start, double ratio, int count) {
  if (!(start > 0.0) || !(ratio > 1.0) || count < 1)
    throw DomainError("ladder needs start > 0, ratio > 1, count >= 1");
  std::vector<double> out;
  for (int k = 0; k < count; ++k) out.push_back(start * std::pow(ratio, k));
  return out;
}

Eigen::VectorXd extrapolate_to_infinity(const std::vector<double>& s,
                                        const std::vector<Eigen::VectorXd>& values, int order) {
  if (s.empty() || s.size() != values.size()) throw DomainError("extrapolation needs matching samples");
  std::vector<std::size_t> idx(s.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
  const std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(std::max(order, 0)) + 1, s.size());
  // Neville's scheme evaluated at eps = 0.
  std::vector<double> eps(m);
  std::vector<Eigen::VectorXd> t(m);
  for (std::size_t i = 0; i < m; ++i) {
    eps[i] = 1.0 / (s[idx[i]] * s[idx[i]]);
    t[i] = values[idx[i]];
  }
  for (std::size_t k = 1; k < m; ++k)
    for (std::size_t i = 0; i + k < m; ++i)
      t[i] = (eps[i + k] * t[i] - eps[i] * t[i + 1]) / (eps[i + k] - eps[i]);
  return t[0];
}

double extrapolate_to_infinity(const std::vector<double>& s, const std::vector<double>& values, int order) {
  std::vector<Eigen::VectorXd> v;
  for (double x : values) v.push_back(Eigen::VectorXd::Constant(1, x));
  return extrapolate_to_infinity(s, v, order)(0);
}

double loglog_slope(const std::vector<double>& s, const std::vector<double>& values) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t i = 0; i < s.size() && i < values.size(); ++i) {
    if (!(values[i] > 0.0) || !(s[i] > 0.0)) continue;
    const double x = std::log(s[i]), y = std::log(values[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  const double den = m * sxx - sx * sx;
  return m >= 2 && den > 0.0 ? (m * sxy - sx * sy) / den : 0.0;
}

SweepResult high_energy_sweep(const ForceField& field, const LineParam& line,
                              const std::vector<double>& ladder, Flavor flavor,
                              const ScatterConfig& cfg, const SweepOptions& opts) {
  if (ladder.empty()) throw DomainError("empty s ladder");
  if (flavor == Flavor::kOracle) throw UsageError("sweeps need a solver flavor");
  SweepResult res;
  res.flavor = flavor;
  res.line = line;
  ScatterConfig c = cfg;
  c.compute_w = true;
  const bool modified = flavor == Flavor::kModified;
  res.rows = parallel_map<SweepRow>(ladder.size(), opts.jobs, [&](std::size_t k) {
    const double s = ladder[k];
    const ScatteringDatum d = scatter(field, s * line.theta, line.x, flavor, c);
    SweepRow row;
    row.s = s;
    row.a_sc = d.a_sc;
    row.b_sc = d.b_sc;
    row.w = d.w;
    row.a_scaled = modified ? Vec(s * (d.a_sc - d.w)) : Vec(s * d.a_sc);
    row.b_scaled = s * s * line.theta.dot(modified ? d.b_sc : Vec(d.b_sc - d.w));
    return row;
  });

  std::vector<double> s;
  std::vector<Eigen::VectorXd> a;
  std::vector<double> b;
  for (const auto& row : res.rows) {
    s.push_back(row.s);
    a.emplace_back(row.a_scaled);
    b.push_back(row.b_scaled);
  }
  res.a_limit = Vec(extrapolate_to_infinity(s, a, opts.extrapolation_order));
  res.b_limit = extrapolate_to_infinity(s, b, opts.extrapolation_order);
  if (!opts.targets) return res;

  res.a_target = xray_force(field, modified ? FieldPart::kShort : FieldPart::kTotal, line);
  res.b_target = -xray_potential(field, FieldPart::kShort, line);
  res.a_rel_error = relative_error(res.a_limit, res.a_target);
  res.b_rel_error = relative_error(res.b_limit, res.b_target);
  std::vector<double> da, db;
  for (const auto& row : res.rows) {
    da.push_back((row.a_scaled - res.a_target).norm());
    db.push_back(std::abs(row.b_scaled - res.b_target));
  }
  res.a_slope = loglog_slope(s, da);
  res.b_slope = loglog_slope(s, db);
  return res;
}

}  // namespace newtonscat
