#include <algorithm>
#include <cmath>
#include <sstream>

#include "newtonscat/errors.hpp"
#include "newtonscat/scattering.hpp"
#include "path_forces.hpp"

namespace newtonscat {

ModifiedMap::ModifiedMap(const IncomingOperator& op, const MrFunction& y_minus) : op_(op) {
  if (op.flavor() != Flavor::kModified) throw UsageError("the outgoing map needs the modified flavor");
  const TimeGrid& g = *op.grid();
  const ForceField& field = op.field();
  path_ = op.base() + y_minus.values;
  long_force_ = detail::long_forces(field, path_);
  const Path Fs = detail::short_forces(field, path_);
  a_tilde_sc_ = Vec(g.integrate(long_force_ + Fs));
  a_tilde_ = op.v_minus() + a_tilde_sc_;
  l_tilde_ = y_minus.at_zero() - Vec(future_moment(g, Fs));
}

double ModifiedMap::ball_radius() const { return bounds::g_ball(op_.x_minus().norm()); }

FreeFlow ModifiedMap::outgoing(const Vec& h) const {
  FreeFlowConfig fc;
  fc.sign = FlowSign::kPlus;
  fc.picard_tol = op_.config().free_tol;
  fc.max_iter = op_.config().free_max_iter;
  return solve_free(op_.field(), a_tilde_, op_.x_minus(), h, fc, op_.grid(), op_.v_minus());
}

Vec ModifiedMap::operator()(const Vec& h) const {
  const Path z = outgoing(h).positions();
  return l_tilde_ - Vec(future_moment(*op_.grid(), long_force_ - detail::long_forces(op_.field(), z)));
}

ModifiedFixedPoint solve_b_tilde(const IncomingOperator& op, const MrFunction& y_minus) {
  const DecayProfile& p = op.field().profile();
  const double xn = op.x_minus().norm(), vn = op.v_minus().norm();
  const BoundConstants c = bound_constants(p, xn, vn, y_minus.r);
  if (op.config().check_preconditions && !(c.modified_lhs <= 1.0)) {
    std::ostringstream os;
    os << "outgoing map smallness condition fails (lhs = " << c.modified_lhs << " > 1)";
    throw InfeasibleError("modified smallness", os.str());
  }

  const ModifiedMap G(op, y_minus);
  ModifiedFixedPoint fp;
  fp.ball_radius = G.ball_radius();
  Vec h = zero_vec(p.dim);
  for (int it = 1; it <= op.config().max_iter; ++it) {
    const Vec next = G(h);
    if (!next.allFinite()) throw NumericError("non-finite value of the outgoing map");
    if (next.norm() > fp.ball_radius * (1.0 + 1e-12))
      throw NumericError("outgoing map left its invariant ball (|h| = " + std::to_string(next.norm()) +
                         ")");
    const double step = (next - h).norm();
    fp.steps.push_back(step);
    const std::size_t k = fp.steps.size();
    if (k >= 2 && fp.steps[k - 2] > 1e-13 * std::max(next.norm(), 1e-300))
      fp.contraction_measured = std::max(fp.contraction_measured, step / fp.steps[k - 2]);
    h = next;
    fp.iterations = it;
    if (step <= 1e-14 * h.norm() || step == 0.0) break;
    if (it == op.config().max_iter)
      throw ConvergenceError("outgoing map iteration did not converge", fp.steps);
  }
  fp.b_tilde_sc = h;
  fp.b_tilde = op.x_minus() + h;
  return fp;
}

}  // namespace newtonscat
