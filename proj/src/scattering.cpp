#include "newtonscat/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "newtonscat/errors.hpp"
#include "path_forces.hpp"

namespace newtonscat {

using detail::long_forces;
using detail::shifted;
using detail::short_forces;

const char* to_string(Flavor flavor) {
  switch (flavor) {
    case Flavor::kStandard: return "standard";
    case Flavor::kModified: return "modified";
    case Flavor::kIterateN: return "iterate_N";
    case Flavor::kOracle: return "oracle";
  }
  return "?";
}

Flavor flavor_from_string(const std::string& name) {
  if (name == "standard") return Flavor::kStandard;
  if (name == "modified") return Flavor::kModified;
  if (name == "iterate_N" || name == "iterate") return Flavor::kIterateN;
  if (name == "oracle") return Flavor::kOracle;
  throw ConfigError("unknown flavor '" + name + "'");
}

double mr_norm(const TimeGrid& grid, const Path& values, const Path* edges) {
  double past = 0.0, future = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid.time(i), m = values.col(static_cast<Eigen::Index>(i)).norm();
    if (t <= 0.0) past = std::max(past, m);
    else future = std::max(future, m / (1.0 + t));
  }
  if (edges) {
    const auto& et = grid.edge_times();
    for (std::size_t i = 0; i < et.size(); ++i) {
      const double m = edges->col(static_cast<Eigen::Index>(i)).norm();
      if (et[i] <= 0.0) past = std::max(past, m);
      if (et[i] >= 0.0) future = std::max(future, m / (1.0 + et[i]));
    }
  }
  return past + future;
}

double MrFunction::norm() const { return mr_norm(*grid, values, edges.size() ? &edges : nullptr); }

MrFunction MrFunction::zero(std::shared_ptr<const TimeGrid> grid, int dim, double r) {
  MrFunction f;
  f.values = Path::Zero(dim, static_cast<Eigen::Index>(grid->size()));
  f.edges = Path::Zero(dim, static_cast<Eigen::Index>(grid->edge_times().size()));
  f.grid = std::move(grid);
  f.r = r;
  return f;
}

std::shared_ptr<const TimeGrid> make_scatter_grid(double speed, double alpha, const ScatterConfig& cfg) {
  if (!(speed > 0.0)) throw DomainError("grid needs a positive speed");
  GridSpec spec = grid_for_speed(speed, alpha, cfg.grid_length);
  spec.core_panel = cfg.core_panel;
  spec.far_panel = cfg.far_panel;
  spec.order = cfg.grid_order;
  return std::make_shared<const TimeGrid>(spec);
}

Vec project_orthogonal(const Vec& v, const Vec& x) {
  if (v.size() != x.size()) throw DomainError("v_- and x_- differ in dimension");
  const double vn = v.norm(), xn = x.norm();
  if (!(vn > 0.0)) throw DomainError("v_- must be nonzero");
  const double dot = v.dot(x);
  if (std::abs(dot) > 1e-12 * vn * xn)
    throw InfeasibleError("orthogonality", "x_- is not orthogonal to v_- (v.x = " +
                                               std::to_string(dot) + ")");
  return x - (dot / (vn * vn)) * v;
}

namespace {

void check_finite(const Vec& v, const char* what) {
  if (!v.allFinite()) throw DomainError(std::string(what) + " is not finite");
}

FreeFlowConfig free_config(const ScatterConfig& cfg, FlowSign sign) {
  FreeFlowConfig fc;
  fc.sign = sign;
  fc.picard_tol = cfg.free_tol;
  fc.max_iter = cfg.free_max_iter;
  return fc;
}

std::string threshold_advice(const DecayProfile& p, double x_norm, double r, bool modified) {
  std::ostringstream os;
  try {
    const double s0 = s_threshold(p, x_norm, r, modified ? ThresholdVariant::kModified
                                                         : ThresholdVariant::kStandard);
    os << "; increase |v_-| (threshold " << (modified ? "s0~" : "s0") << " = " << s0 << ")";
  } catch (const std::exception&) {
    os << "; increase |v_-|";
  }
  return os.str();
}

}  // namespace

IncomingOperator::IncomingOperator(ForceField field, const Vec& v_minus, const Vec& x_minus,
                                   Flavor flavor, const ScatterConfig& cfg,
                                   std::shared_ptr<const TimeGrid> grid)
    : field_(std::move(field)), v_(v_minus), flavor_(flavor), cfg_(cfg), grid_(std::move(grid)) {
  const DecayProfile& p = field_.profile();
  p.validate();
  if (flavor_ == Flavor::kOracle) throw UsageError("the oracle flavor has no incoming operator");
  if (v_.size() != p.dim || x_minus.size() != p.dim)
    throw DomainError("v_- and x_- must have the field's dimension");
  check_finite(v_, "v_-");
  check_finite(x_minus, "x_-");
  x_ = project_orthogonal(v_, x_minus);
  const double speed = v_.norm(), xn = x_.norm();
  const bool modified = flavor_ == Flavor::kModified;

  if (cfg_.check_preconditions) {
    const double mu = modified ? mu_of_sigma(p, xn) : mu_threshold(p);
    if (speed < mu)
      throw InfeasibleError("speed threshold", "|v_-| = " + std::to_string(speed) + " below mu = " +
                                                   std::to_string(mu) +
                                                   threshold_advice(p, xn, default_radius(xn, modified), modified));
  }
  if (!grid_) grid_ = make_scatter_grid(speed, p.alpha, cfg_);

  const int n = p.dim;
  const Vec zero = zero_vec(n);
  switch (flavor_) {
    case Flavor::kStandard:
      incoming_ = solve_free(field_, v_, zero, zero, free_config(cfg_, FlowSign::kMinus), grid_);
      ref_force_ = long_forces(field_, incoming_.positions());
      base_ = shifted(incoming_.positions(), x_);
      break;
    case Flavor::kModified:
      incoming_ = solve_free(field_, v_, x_, zero, free_config(cfg_, FlowSign::kMinus), grid_);
      base_ = incoming_.positions();
      ref_force_ = long_forces(field_, base_);
      break;
    case Flavor::kIterateN: {
      order_ = iterate_count(p.alpha);
      FreeIterates its = free_iterates(field_, v_, zero, zero, order_, FlowSign::kMinus, grid_);
      incoming_ = its.flows[static_cast<std::size_t>(order_ + 1)];
      reference_ = its.flows[static_cast<std::size_t>(order_)];
      base_ = shifted(incoming_.positions(), x_);
      ref_force_ = long_forces(field_, reference_->positions());
      break;
    }
    case Flavor::kOracle: break;
  }
}

Path IncomingOperator::integrand(const Path& f) const {
  Path g(base_.rows(), base_.cols());
  for (Eigen::Index i = 0; i < base_.cols(); ++i)
    g.col(i) = field_.force(Vec(base_.col(i) + f.col(i))) - Vec(ref_force_.col(i));
  return g;
}

MrFunction IncomingOperator::apply(const MrFunction& f) const {
  if (!f.grid || !(f.grid == grid_ || f.grid->spec() == grid_->spec()))
    throw UsageError("MrFunction lives on a different time grid");
  if (f.values.rows() != base_.rows() || f.values.cols() != base_.cols())
    throw UsageError("MrFunction has the wrong shape");
  const Path g = integrand(f.values);
  if (!g.allFinite()) throw NumericError("non-finite integrand in the incoming operator");
  MrFunction out;
  out.grid = grid_;
  out.r = f.r;
  out.rates = grid_->cumulative_forward(g);
  out.values = grid_->cumulative_forward(out.rates, &out.edges);

  // Mass of the double integral lost before t_min, bounded by the remainder estimates.
  const DecayProfile& p = field_.profile();
  const double T = -grid_->t_min(), xn = x_.norm(), vn = v_.norm();
  const bool modified = flavor_ == Flavor::kModified;
  const double dev = modified ? bounds::modified_deviation(p, xn, vn, f.r, T)
                              : bounds::incoming_deviation(p, xn, vn, f.r, T);
  const double rate = modified ? bounds::modified_rate(p, xn, vn, f.r, T)
                               : bounds::incoming_rate(p, xn, vn, f.r, T);
  out.error_bar = dev + T * rate;
  if (!std::isfinite(out.error_bar)) out.error_bar = 0.0;
  return out;
}

MrFunction apply_A(const ForceField& field, const Vec& v_minus, const Vec& x_minus,
                   const MrFunction& f, Flavor flavor, const ScatterConfig& cfg) {
  IncomingOperator op(field, v_minus, x_minus, flavor, cfg, f.grid);
  return op.apply(f);
}

IncomingSolution solve_y_minus(const IncomingOperator& op) {
  const DecayProfile& p = op.field().profile();
  const ScatterConfig& cfg = op.config();
  const double xn = op.x_minus().norm(), vn = op.v_minus().norm();
  const bool modified = op.flavor() == Flavor::kModified;
  const double r0 = cfg.r > 0.0 ? cfg.r : default_radius(xn, modified);

  IncomingSolution sol;
  BoundConstants c = bound_constants(p, xn, vn, r0);
  auto feasible = [&](const BoundConstants& b) {
    return (modified ? b.rho_tilde : b.rho) <= b.r && b.lambda < 1.0;
  };
  double r = r0;
  for (int k = 0; k < cfg.radius_halvings && !feasible(c); ++k) {
    r *= 0.5;
    c = bound_constants(p, xn, vn, r);
  }
  if (!feasible(c)) {
    if (cfg.check_preconditions) {
      std::ostringstream os;
      os << "contraction not guaranteed at |v_-| = " << vn << ": "
         << (modified ? "rho~" : "rho") << " = " << (modified ? c.rho_tilde : c.rho)
         << " vs r = " << c.r << ", lambda = " << c.lambda << threshold_advice(p, xn, r0, modified);
      throw InfeasibleError("contraction", os.str());
    }
    r = r0;
    c = bound_constants(p, xn, vn, r);
    sol.warnings.push_back("contraction preconditions fail; iterating without guarantee");
  } else if (r != r0) {
    sol.warnings.push_back("ball radius reduced to " + std::to_string(r));
  }
  sol.constants = c;

  MrFunction f = MrFunction::zero(op.grid(), p.dim, r);
  double prev = 0.0;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    MrFunction next = op.apply(f);
    const double res = mr_norm(*op.grid(), next.values - f.values, nullptr);
    const double size = next.norm();
    sol.residuals.push_back(res);
    if (it >= 2 && prev > 1e3 * std::numeric_limits<double>::epsilon() * std::max(size, 1e-300))
      sol.measured_ratio = std::max(sol.measured_ratio, res / prev);
    prev = res;
    f = std::move(next);
    sol.iterations = it;
    if (res == 0.0 || res <= cfg.picard_tol * size) {
      sol.y_minus = std::move(f);
      return sol;
    }
  }
  throw ConvergenceError("incoming Picard iteration did not converge in " +
                             std::to_string(cfg.max_iter) + " iterations",
                         sol.residuals);
}

IncomingSolution solve_y_minus(const ForceField& field, const Vec& v_minus, const Vec& x_minus,
                               Flavor flavor, const ScatterConfig& cfg) {
  IncomingOperator op(field, v_minus, x_minus, flavor, cfg);
  return solve_y_minus(op);
}

Eigen::VectorXd future_moment(const TimeGrid& grid, const Path& g) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(g.rows());
  for (std::size_t i = grid.first_future_node(); i < grid.size(); ++i)
    out += grid.weight(i) * grid.time(i) * g.col(static_cast<Eigen::Index>(i));
  return out;
}

Eigen::VectorXd past_moment(const TimeGrid& grid, const Path& g) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(g.rows());
  for (std::size_t i = 0; i < grid.first_future_node(); ++i)
    out -= grid.weight(i) * grid.time(i) * g.col(static_cast<Eigen::Index>(i));
  return out;
}

namespace {

// Beyond this distance from the scattering region the positions X and z_+ hold
// too few digits of their difference for y_+ to be meaningful.
constexpr double kRemainderCheckDistance = 1e8;

void add_check(ScatteringDatum& d, std::string name, double lhs, double rhs) {
  // Relative slack for quadrature noise on vanishing quantities.
  const bool pass = lhs <= rhs * (1.0 + 1e-9) + 1e-15;
  d.checks.push_back({std::move(name), lhs, rhs, pass});
}

// Worst node of |values| against bound(t) over one half line, restricted to
// |t| <= t_limit.
template <class Bound>
void add_nodewise_check(ScatteringDatum& d, const std::string& name, const TimeGrid& grid,
                        const Path& values, bool past, Bound bound,
                        double t_limit = std::numeric_limits<double>::infinity()) {
  double worst = -1.0, lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid.time(i);
    if (past != (t <= 0.0) || std::abs(t) > t_limit) continue;
    const double m = values.col(static_cast<Eigen::Index>(i)).norm(), b = bound(t);
    const double ratio = b > 0.0 ? m / b : (m > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    if (ratio > worst) {
      worst = ratio;
      lhs = m;
      rhs = b;
    }
  }
  add_check(d, name, lhs, rhs);
}

// X - Z - (b - x_-) - y_+ over forward nodes with moderate t, in deviation
// form: X = x_- + t v + dev_in + y and Z = origin_out + t a + dev_out.
double decomposition_residual(const IncomingOperator& op, const MrFunction& y, const FreeFlow& out,
                              const Vec& b_sc, const Path& y_plus, std::size_t first, const Vec& a) {
  const TimeGrid& g = *op.grid();
  const FreeFlow& in = op.incoming_flow();
  const Vec in_origin = op.flavor() == Flavor::kModified ? Vec(in.origin) : Vec(op.x_minus());
  const double vn = op.v_minus().norm();
  double worst = 0.0;
  for (std::size_t i = first; i < g.size(); ++i) {
    const double t = g.time(i);
    if (t * vn > 1e4) break;
    const auto c = static_cast<Eigen::Index>(i);
    const Vec diff = (in_origin - out.origin) + t * (op.v_minus() - a) +
                     Vec(in.deviation.col(c) - out.deviation.col(c) + y.values.col(c));
    const Vec expect = (op.x_minus() + b_sc - out.origin) + Vec(y_plus.col(c - static_cast<Eigen::Index>(first)));
    worst = std::max(worst, (diff - expect).norm());
  }
  return worst;
}

Path outgoing_remainder(const TimeGrid& g, const Path& integrand_nodes, std::size_t first) {
  const Path inner = g.cumulative_backward(integrand_nodes);
  const Path full = g.cumulative_backward(inner);
  return full.rightCols(full.cols() - static_cast<Eigen::Index>(first));
}

void fill_y_plus(ScatteringDatum& d, const TimeGrid& g, const Path& y_plus, std::size_t first) {
  d.y_plus = y_plus;
  d.y_plus_times.assign(g.times().begin() + static_cast<std::ptrdiff_t>(first), g.times().end());
}

ScatteringDatum assemble_standard(const IncomingOperator& op, const IncomingSolution& sol) {
  const ForceField& field = op.field();
  const DecayProfile& p = field.profile();
  const TimeGrid& g = *op.grid();
  const MrFunction& y = sol.y_minus;
  const Vec& v = op.v_minus();
  const Vec& x = op.x_minus();
  const int n = p.dim;
  const double xn = x.norm(), vn = v.norm(), r = y.r;
  const bool iterate = op.flavor() == Flavor::kIterateN;

  ScatteringDatum d;
  d.flavor = op.flavor();
  d.v_minus = v;
  d.x_minus = x;
  d.r = r;
  d.iterations = sol.iterations;
  d.warnings = sol.warnings;

  const Path X = op.base() + y.values;
  const Path Fl = long_forces(field, X);
  const Path Fs = short_forces(field, X);
  const Path F = Fl + Fs;
  // a_sc straight from the integral; a - v would lose the digits of |v|.
  d.a_sc = Vec(g.integrate(F));
  d.a = v + d.a_sc;

  const Vec zero = zero_vec(n);
  FreeFlow out, ref;
  if (iterate) {
    FreeIterates its = free_iterates(field, d.a, zero, zero, op.order(), FlowSign::kPlus, op.grid());
    out = its.flows[static_cast<std::size_t>(op.order() + 1)];
    ref = its.flows[static_cast<std::size_t>(op.order())];
  } else {
    out = solve_free(field, d.a, zero, zero, free_config(op.config(), FlowSign::kPlus), op.grid());
    ref = out;
  }
  const Path Q = ref.positions();
  const Path FlQ = long_forces(field, Q);
  const Path FlQx = long_forces(field, shifted(Q, x));

  d.l = y.at_zero() - Vec(future_moment(g, Fs));
  d.l1 = -Vec(future_moment(g, FlQx - FlQ));
  d.l2 = -Vec(future_moment(g, Fl - FlQx));
  d.b_sc = d.l + d.l1 + d.l2;
  d.b = x + d.b_sc;

  const std::size_t first = g.first_future_node();
  const Path yp = outgoing_remainder(g, F - FlQ, first);
  fill_y_plus(d, g, yp, first);
  d.decomposition_residual = decomposition_residual(op, y, out, d.b_sc, yp, first, d.a);
  d.energy_error = std::abs(d.a.norm() - vn) / vn;
  d.guaranteed = sol.constants.breakdown_lhs <= 1.0;
  if (!d.guaranteed)
    d.warnings.push_back("breakdown smallness condition fails (lhs = " +
                         std::to_string(sol.constants.breakdown_lhs) + "); outside guaranteed regime");

  if (op.config().compute_w) {
    const Path zin = op.reference_flow().positions();
    d.w = Vec(past_moment(g, long_forces(field, shifted(zin, x)) - long_forces(field, zin))) + d.l1;
  }

  if (!iterate) {
    add_nodewise_check(d, "incoming_rate", g, y.rates, true,
                       [&](double t) { return bounds::incoming_rate(p, xn, vn, r, t); });
    add_nodewise_check(d, "incoming_deviation", g, y.values, true,
                       [&](double t) { return bounds::incoming_deviation(p, xn, vn, r, t); });
    add_check(d, "a_sc", d.a_sc.norm(), bounds::a_sc(p, xn, vn, r));
    add_check(d, "l", d.l.norm(), bounds::l_term(p, xn, vn, r));

    // Born terms: the same quantities along the unperturbed incoming asymptote.
    const Path Fbase = long_forces(field, op.base()) + short_forces(field, op.base());
    const Vec a_born = Vec(g.integrate(Fbase));
    const MrFunction A0 = op.apply(MrFunction::zero(op.grid(), n, r));
    const Vec l_born = A0.at_zero() - Vec(future_moment(g, short_forces(field, op.base())));
    add_check(d, "a_sc_born", (d.a_sc - a_born).norm(), bounds::a_sc_born(p, xn, vn, r));
    add_check(d, "l_born", (d.l - l_born).norm(), bounds::l_term_born(p, xn, vn, r));
    if (d.guaranteed) {
      add_check(d, "l1", d.l1.norm(), bounds::l1_term(p, xn, vn));
      add_check(d, "l2", d.l2.norm(), bounds::l2_term(p, xn, vn, r));
      add_nodewise_check(d, "outgoing_remainder", g, [&] {
        Path full = Path::Zero(n, static_cast<Eigen::Index>(g.size()));
        full.rightCols(yp.cols()) = yp;
        return full;
      }(), false, [&](double t) { return bounds::outgoing_remainder(p, xn, vn, r, t); },
      kRemainderCheckDistance / vn);
    }
  }
  return d;
}

ScatteringDatum assemble_modified(const IncomingOperator& op, const IncomingSolution& sol) {
  const ForceField& field = op.field();
  const DecayProfile& p = field.profile();
  const TimeGrid& g = *op.grid();
  const MrFunction& y = sol.y_minus;
  const Vec& v = op.v_minus();
  const Vec& x = op.x_minus();
  const int n = p.dim;
  const double xn = x.norm(), vn = v.norm(), r = y.r;

  ScatteringDatum d;
  d.flavor = Flavor::kModified;
  d.v_minus = v;
  d.x_minus = x;
  d.r = r;
  d.iterations = sol.iterations;
  d.warnings = sol.warnings;

  const ModifiedMap G(op, y);
  const ModifiedFixedPoint fp = solve_b_tilde(op, y);
  d.a = G.a_tilde();
  d.a_sc = G.a_tilde_sc();
  d.l = G.l_tilde();
  d.l1 = zero_vec(n);
  d.l2 = fp.b_tilde_sc - d.l;
  d.b_sc = fp.b_tilde_sc;
  d.b = fp.b_tilde;
  d.g_contraction = fp.contraction_measured;
  d.g_ball = fp.ball_radius;

  const Path X = op.base() + y.values;
  const Path F = long_forces(field, X) + short_forces(field, X);
  const FreeFlow out = G.outgoing(d.b_sc);
  const std::size_t first = g.first_future_node();
  const Path yp = outgoing_remainder(g, F - long_forces(field, out.positions()), first);
  fill_y_plus(d, g, yp, first);
  d.decomposition_residual = decomposition_residual(op, y, out, d.b_sc, yp, first, d.a);
  d.energy_error = std::abs(d.a.norm() - vn) / vn;
  d.guaranteed = true;

  const Path Fs_in = short_forces(field, op.base());
  if (op.config().compute_w) {
    const FreeFlow out0 = G.outgoing(zero_vec(n));
    d.w = Vec(g.integrate_half(op.ref_force(), true)) +
          Vec(g.integrate_half(long_forces(field, out0.positions()), false));
  }

  add_nodewise_check(d, "modified_rate", g, y.rates, true,
                     [&](double t) { return bounds::modified_rate(p, xn, vn, r, t); });
  add_nodewise_check(d, "modified_deviation", g, y.values, true,
                     [&](double t) { return bounds::modified_deviation(p, xn, vn, r, t); });
  add_check(d, "modified_a_sc", d.a_sc.norm(), bounds::modified_a_sc(p, xn, vn, r));
  add_check(d, "modified_b_sc", d.b_sc.norm(), bounds::modified_b_sc(p, xn, vn, r));
  if (d.w.size()) {
    const Vec born = d.w + Vec(g.integrate(Fs_in));
    add_check(d, "modified_a_born", (d.a_sc - born).norm(), bounds::modified_a_born(p, xn, vn, r));
  }
  const MrFunction A0 = op.apply(MrFunction::zero(op.grid(), n, r));
  const Vec b_born = A0.at_zero() - Vec(future_moment(g, Fs_in));
  add_check(d, "modified_b_born", (d.b_sc - b_born).norm(), bounds::modified_b_born(p, xn, vn, r));
  add_check(d, "g_map", d.b_sc.norm(), bounds::g_map(p, xn, vn, r));
  add_check(d, "g_ball", d.b_sc.norm(), fp.ball_radius);
  add_check(d, "g_contraction", fp.contraction_measured, 0.1);
  Path full = Path::Zero(n, static_cast<Eigen::Index>(g.size()));
  full.rightCols(yp.cols()) = yp;
  add_nodewise_check(d, "modified_remainder", g, full, false,
                     [&](double t) { return bounds::modified_remainder(p, xn, vn, r, t); },
                     kRemainderCheckDistance / vn);
  return d;
}

}  // namespace

ScatteringDatum assemble_scattering_data(const IncomingOperator& op, const IncomingSolution& sol) {
  if (!sol.y_minus.grid) throw UsageError("incoming solution is empty");
  ScatteringDatum d = op.flavor() == Flavor::kModified ? assemble_modified(op, sol)
                                                       : assemble_standard(op, sol);
  if (!d.a.allFinite() || !d.b.allFinite()) throw NumericError("non-finite scattering data");
  if (op.config().refine_w && d.w.size()) d.w_error = compute_W(op.field(), d, op.config()).error_bar;
  return d;
}

ScatteringDatum scatter(const ForceField& field, const Vec& v_minus, const Vec& x_minus,
                        Flavor flavor, const ScatterConfig& cfg) {
  IncomingOperator op(field, v_minus, x_minus, flavor, cfg);
  return assemble_scattering_data(op, solve_y_minus(op));
}

namespace {

Vec w_on_grid(const ForceField& field, const ScatteringDatum& d, const ScatterConfig& cfg) {
  const int n = field.dim();
  const Vec zero = zero_vec(n);
  const auto grid = make_scatter_grid(d.v_minus.norm(), field.profile().alpha, cfg);
  const TimeGrid& g = *grid;
  const Vec& x = d.x_minus;
  const FreeFlowConfig minus = free_config(cfg, FlowSign::kMinus);
  const FreeFlowConfig plus = free_config(cfg, FlowSign::kPlus);
  switch (d.flavor) {
    case Flavor::kStandard: {
      const Path zin = solve_free(field, d.v_minus, zero, zero, minus, grid).positions();
      const Path zout = solve_free(field, d.a, zero, zero, plus, grid).positions();
      return Vec(past_moment(g, long_forces(field, shifted(zin, x)) - long_forces(field, zin)) -
                 future_moment(g, long_forces(field, shifted(zout, x)) - long_forces(field, zout)));
    }
    case Flavor::kIterateN: {
      const int N = iterate_count(field.profile().alpha);
      const Path zin = free_iterates(field, d.v_minus, zero, zero, N, FlowSign::kMinus, grid)
                           .flows[static_cast<std::size_t>(N)].positions();
      const Path zout = free_iterates(field, d.a, zero, zero, N, FlowSign::kPlus, grid)
                            .flows[static_cast<std::size_t>(N)].positions();
      return Vec(past_moment(g, long_forces(field, shifted(zin, x)) - long_forces(field, zin)) -
                 future_moment(g, long_forces(field, shifted(zout, x)) - long_forces(field, zout)));
    }
    case Flavor::kModified: {
      const Path zin = solve_free(field, d.v_minus, x, zero, minus, grid).positions();
      const Path zout = solve_free(field, d.a, x, zero, plus, grid, d.v_minus).positions();
      return Vec(g.integrate_half(long_forces(field, zin), true) +
                 g.integrate_half(long_forces(field, zout), false));
    }
    case Flavor::kOracle: break;
  }
  throw UsageError("W is not defined for oracle data");
}

}  // namespace

WVector compute_W(const ForceField& field, const ScatteringDatum& datum, const ScatterConfig& cfg) {
  if (datum.a.size() != field.dim() || datum.v_minus.size() != field.dim())
    throw UsageError("incomplete scattering datum");
  WVector w;
  w.value = w_on_grid(field, datum, cfg);
  if (cfg.refine_w) {
    ScatterConfig fine = cfg;
    fine.core_panel *= 0.5;
    fine.far_panel *= 0.5;
    w.error_bar = (w_on_grid(field, datum, fine) - w.value).norm();
  }
  return w;
}

}  // namespace newtonscat
