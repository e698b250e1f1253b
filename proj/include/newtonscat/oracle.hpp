#pragma once

#include <vector>

#include "newtonscat/free_dynamics.hpp"
#include "newtonscat/potentials.hpp"
#include "newtonscat/scattering.hpp"

namespace newtonscat {

struct OracleConfig {
  double rel_tol = 1e-13;
  double abs_tol = 1e-13;
  /// Start of the integration on the incoming asymptote.
  double t_launch = -100.0;
  /// End of the forward integration.
  double t_capture_limit = 100.0;
  /// Trailing fraction of [0, t_capture_limit] used for the asymptote fit.
  double fit_window = 0.25;
  int fit_rounds = 3;
  /// Uniform output samples over the whole span.
  int samples = 4001;
  /// Free flows used for launch and fit.
  ScatterConfig free;
};

/// Adaptive Runge-Kutta-Fehlberg 7(8) integration of xddot = F(x) from
/// (x0, v0) at `times.front()`, with output at every entry of `times`
/// (strictly increasing). The energy drift is stored in
/// diagnostics.residual. Throws NumericError when the step size collapses.
Trajectory integrate_newton(const ForceField& field, const Vec& x0, const Vec& v0,
                            const std::vector<double>& times, const OracleConfig& cfg = {});

/// Uniformly spaced sample times over [t0, t1].
std::vector<double> uniform_times(double t0, double t1, int count);

struct CaptureReport {
  /// True when 1 + |x(t)| >= eps (1 + |t|) fits the tail with eps > 0.
  bool scattering = false;
  double epsilon = 0.0;
  /// Log-log slope of 1 + |x| against 1 + |t| over the tail.
  double growth_exponent = 0.0;
};

/// Linear-growth test over the last quarter of the forward (t > 0) samples.
CaptureReport detect_capture(const Trajectory& traj);

struct OracleResult {
  bool captured = false;
  CaptureReport capture;
  /// Flavor kOracle; empty when captured.
  ScatteringDatum datum;
  /// RMS of x - z_+(a) - b over the fit window after the last round.
  double fit_residual = 0.0;
  /// Largest |E(t) - E(t_launch)|.
  double energy_drift = 0.0;
  Trajectory trajectory;
};

/// Reference scattering data by direct integration: launch on z_-(v_-) + x_-
/// at t_launch, integrate to t_capture_limit, fit (a, b) against
/// z_+(a, t) + b over the fit window with `fit_rounds` rounds of refinement.
OracleResult oracle_scattering(const ForceField& field, const Vec& v_minus, const Vec& x_minus,
                               const OracleConfig& cfg = {});

}  // namespace newtonscat
