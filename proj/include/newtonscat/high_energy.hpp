#pragma once

#include <vector>

#include "newtonscat/scattering.hpp"
#include "newtonscat/xray.hpp"

namespace newtonscat {

/// Speed threshold of the high-energy bounds on a line at distance |x| from
/// the origin: s0 for the standard flavors, s0~ for the modified one, at the
/// radius cfg.r (default_radius() when 0). Zero for a field with all decay
/// constants zero.
double line_threshold(const ForceField& field, double x_norm, Flavor flavor, const ScatterConfig& cfg = {});

struct TheoremReport {
  Flavor flavor = Flavor::kStandard;
  double s = 0.0;
  double threshold = 0.0;
  double r = 0.0;
  /// t3/t4 style checks (standard) or their modified analogues.
  std::vector<EstimateCheck> checks;
  bool pass = true;
  ScatteringDatum datum;
};

/// Evaluates both sides of the high-energy Born estimates at v_- = s theta,
/// x_- = x. The left sides use the solver's data and straight-line
/// quadrature of F and F^s; the right sides the closed forms. Throws
/// InfeasibleError below the threshold and UsageError for iterate_N/oracle.
TheoremReport verify_theorem_bounds(const ForceField& field, const LineParam& line, double s,
                                    Flavor flavor, const ScatterConfig& cfg = {});

/// start * ratio^k for k < count.
std::vector<double> geometric_ladder(double start, double ratio, int count);

/// Polynomial extrapolation to s = inf in the variable eps = s^-2 through
/// the `order` + 1 largest speeds (order is capped at count - 1).
Eigen::VectorXd extrapolate_to_infinity(const std::vector<double>& s,
                                        const std::vector<Eigen::VectorXd>& values, int order);
double extrapolate_to_infinity(const std::vector<double>& s, const std::vector<double>& values, int order);

struct SweepRow {
  double s = 0.0;
  /// s a_sc (standard, iterate_N) or s (a~_sc - W~) (modified).
  Vec a_scaled;
  /// s^2 theta . (b_sc - W) or s^2 theta . b~_sc.
  double b_scaled = 0.0;
  Vec a_sc, b_sc, w;
};

struct SweepResult {
  Flavor flavor = Flavor::kStandard;
  LineParam line;
  std::vector<SweepRow> rows;
  /// PF (standard, iterate_N) or PF^s (modified), and -PV^s.
  Vec a_target;
  double b_target = 0.0;
  Vec a_limit;
  double b_limit = 0.0;
  double a_rel_error = 0.0;
  double b_rel_error = 0.0;
  /// Log-log slopes of |a_scaled - a_target| and |b_scaled - b_target| in s.
  double a_slope = 0.0;
  double b_slope = 0.0;
};

struct SweepOptions {
  int extrapolation_order = 2;
  int jobs = 1;
  /// Skip the X-ray targets (for callers that subtract their own).
  bool targets = true;
};

/// Scattering data along an s ladder on one line, their scaled forms, the
/// extrapolated limits and the X-ray targets.
SweepResult high_energy_sweep(const ForceField& field, const LineParam& line,
                              const std::vector<double>& ladder, Flavor flavor,
                              const ScatterConfig& cfg = {}, const SweepOptions& opts = {});

/// Least-squares slope of log|values| against log s; 0 with fewer than two
/// positive entries.
double loglog_slope(const std::vector<double>& s, const std::vector<double>& values);

}  // namespace newtonscat
