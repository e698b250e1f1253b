#include "newtonscat/oracle.hpp"

#include <algorithm>
#include <cmath>

#include <boost/numeric/odeint.hpp>

#include "newtonscat/errors.hpp"

namespace newtonscat {

namespace odeint = boost::numeric::odeint;

std::vector<double> uniform_times(double t0, double t1, int count) {
  if (count < 2 || !(t1 > t0)) throw DomainError("uniform_times needs count >= 2 and t1 > t0");
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = t0 + (t1 - t0) * i / (count - 1);
  out.back() = t1;
  return out;
}

Trajectory integrate_newton(const ForceField& field, const Vec& x0, const Vec& v0,
                            const std::vector<double>& times, const OracleConfig& cfg) {
  const int n = field.dim();
  if (x0.size() != n || v0.size() != n) throw DomainError("initial state has the wrong dimension");
  if (!x0.allFinite() || !v0.allFinite()) throw DomainError("initial state is not finite");
  if (times.size() < 2) throw DomainError("need at least two output times");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw DomainError("output times must increase strictly");
  if (!(cfg.rel_tol > 0.0) || !(cfg.abs_tol > 0.0)) throw DomainError("tolerances must be positive");

  // The state is the deviation (u, u') from the launch line x0 + (t - t0) v0,
  // so the tolerances act on scattering-scale quantities rather than on |x|.
  using State = std::vector<double>;
  const double t0 = times.front();
  State s(static_cast<std::size_t>(2 * n), 0.0);
  auto rhs = [&](const State& y, State& dy, double t) {
    Vec x = x0 + (t - t0) * v0;
    for (int i = 0; i < n; ++i) x(i) += y[static_cast<std::size_t>(i)];
    const Vec f = field.force(x);
    for (int i = 0; i < n; ++i) {
      dy[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(n + i)];
      dy[static_cast<std::size_t>(n + i)] = f(i);
    }
  };

  // Checkpoints cap the step at a tenth of the crossing time of the local
  // length scale 1 + |x|, taken along the launch line, so that narrow
  // features near the scatterer cannot fall between two stages.
  const double speed = std::max(v0.norm(), 1e-300);
  std::vector<double> stops;
  std::vector<char> record;
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    stops.push_back(times[i]);
    record.push_back(1);
    double t = times[i];
    for (;;) {
      const double scale = 1.0 + (x0 + (t - t0) * v0).norm();
      t += 0.1 * scale / speed;
      if (t >= times[i + 1]) break;
      stops.push_back(t);
      record.push_back(0);
    }
  }
  stops.push_back(times.back());
  record.push_back(1);

  Trajectory traj;
  traj.times = times;
  traj.positions.resize(n, static_cast<Eigen::Index>(times.size()));
  traj.velocities.resize(n, static_cast<Eigen::Index>(times.size()));
  std::size_t k = 0, stop = 0;
  auto observer = [&](const State& y, double t) {
    if (!record[stop++]) return;
    for (int i = 0; i < n; ++i) {
      traj.positions(i, static_cast<Eigen::Index>(k)) = x0(i) + (t - t0) * v0(i) + y[static_cast<std::size_t>(i)];
      traj.velocities(i, static_cast<Eigen::Index>(k)) = v0(i) + y[static_cast<std::size_t>(n + i)];
    }
    ++k;
  };

  auto stepper = odeint::make_controlled(cfg.abs_tol, cfg.rel_tol,
                                         odeint::runge_kutta_fehlberg78<State>());
  const double dt0 = (stops[1] - stops[0]) * 1e-2;
  try {
    odeint::integrate_times(stepper, rhs, s, stops.begin(), stops.end(), dt0, observer,
                            odeint::max_step_checker(100000));
  } catch (const std::exception& e) {
    throw NumericError(std::string("direct integration failed: ") + e.what());
  }
  if (k != times.size() || !traj.positions.allFinite())
    throw NumericError("direct integration produced incomplete or non-finite output");

  const double e0 = field.energy(x0, v0);
  double drift = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    drift = std::max(drift, std::abs(field.energy(Vec(traj.positions.col(c)), Vec(traj.velocities.col(c))) - e0));
  }
  traj.diagnostics.residual = drift;
  return traj;
}

CaptureReport detect_capture(const Trajectory& traj) {
  CaptureReport rep;
  std::vector<std::size_t> fwd;
  for (std::size_t i = 0; i < traj.size(); ++i)
    if (traj.times[i] > 0.0) fwd.push_back(i);
  if (fwd.size() < 4) return rep;
  const std::size_t start = fwd.size() - std::max<std::size_t>(fwd.size() / 4, 2);
  double sx = 0, sy = 0, sxx = 0, sxy = 0, eps = std::numeric_limits<double>::infinity();
  std::size_t m = 0;
  for (std::size_t j = start; j < fwd.size(); ++j, ++m) {
    const std::size_t i = fwd[j];
    const double t = traj.times[i];
    const double x = traj.positions.col(static_cast<Eigen::Index>(i)).norm();
    const double lx = std::log1p(t), ly = std::log1p(x);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    eps = std::min(eps, (1.0 + x) / (1.0 + t));
  }
  const double mm = static_cast<double>(m);
  const double den = mm * sxx - sx * sx;
  rep.growth_exponent = den > 0.0 ? (mm * sxy - sx * sy) / den : 0.0;
  rep.scattering = rep.growth_exponent > 0.5;
  rep.epsilon = rep.scattering ? 0.5 * eps : 0.0;
  return rep;
}

OracleResult oracle_scattering(const ForceField& field, const Vec& v_minus, const Vec& x_minus,
                               const OracleConfig& cfg) {
  const DecayProfile& p = field.profile();
  p.validate();
  if (!(cfg.t_launch < 0.0) || !(cfg.t_capture_limit > 0.0))
    throw DomainError("need t_launch < 0 < t_capture_limit");
  if (!(cfg.fit_window > 0.0 && cfg.fit_window <= 1.0)) throw DomainError("fit_window must be in (0, 1]");
  if (v_minus.size() != p.dim || x_minus.size() != p.dim)
    throw DomainError("v_- and x_- must have the field's dimension");
  const Vec x = project_orthogonal(v_minus, x_minus);
  const double speed = v_minus.norm(), mu = mu_threshold(p);
  if (speed < mu)
    throw InfeasibleError("speed threshold", "|v_-| = " + std::to_string(speed) + " below mu = " +
                                                 std::to_string(mu));

  const int n = p.dim;
  const Vec zero = zero_vec(n);
  FreeFlowConfig fc;
  fc.picard_tol = cfg.free.free_tol;
  fc.max_iter = cfg.free.free_max_iter;

  fc.sign = FlowSign::kMinus;
  const auto in_grid = make_scatter_grid(speed, p.alpha, cfg.free);
  const FreeFlow in = solve_free(field, v_minus, zero, zero, fc, in_grid);
  const Vec x0 = in.position_at(cfg.t_launch) + x;
  const Vec v0 = in.velocity_at(cfg.t_launch);

  OracleResult res;
  res.trajectory = integrate_newton(field, x0, v0, uniform_times(cfg.t_launch, cfg.t_capture_limit, cfg.samples), cfg);
  res.energy_drift = res.trajectory.diagnostics.residual;
  res.capture = detect_capture(res.trajectory);
  if (!res.capture.scattering) {
    res.captured = true;
    return res;
  }

  const Trajectory& tr = res.trajectory;
  std::vector<std::size_t> window;
  const double t_fit = (1.0 - cfg.fit_window) * cfg.t_capture_limit;
  for (std::size_t i = 0; i < tr.size(); ++i)
    if (tr.times[i] >= t_fit) window.push_back(i);
  if (window.size() < 2) throw DomainError("fit window holds fewer than two samples");

  // Alternate between the asymptote and its free flow.
  fc.sign = FlowSign::kPlus;
  Vec a = tr.velocities.col(tr.velocities.cols() - 1);
  Vec b = zero;
  std::vector<double> residuals;
  const double m = static_cast<double>(window.size());
  for (int round = 0; round < cfg.fit_rounds; ++round) {
    const FreeFlow out = solve_free(field, a, zero, zero, fc, make_scatter_grid(a.norm(), p.alpha, cfg.free));
    Vec dv = zero, db = zero;
    for (std::size_t i : window) {
      const auto c = static_cast<Eigen::Index>(i);
      dv += Vec(tr.velocities.col(c)) - out.velocity_at(tr.times[i]);
      db += Vec(tr.positions.col(c)) - out.position_at(tr.times[i]);
    }
    a += dv / m;
    b = db / m;
    double rms = 0.0;
    for (std::size_t i : window) {
      const auto c = static_cast<Eigen::Index>(i);
      rms += (Vec(tr.positions.col(c)) - out.position_at(tr.times[i]) - b).squaredNorm();
    }
    residuals.push_back(std::sqrt(rms / m));
    if (!a.allFinite() || !b.allFinite())
      throw ConvergenceError("asymptote fit diverged", residuals);
  }
  res.fit_residual = residuals.back();

  ScatteringDatum& d = res.datum;
  d.flavor = Flavor::kOracle;
  d.v_minus = v_minus;
  d.x_minus = x;
  d.a = a;
  d.b = b;
  d.a_sc = a - v_minus;
  d.b_sc = b - x;
  d.energy_error = std::abs(a.norm() - speed) / speed;
  d.iterations = cfg.fit_rounds;
  return res;
}

}  // namespace newtonscat
