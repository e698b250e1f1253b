#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "newtonscat/potentials.hpp"
#include "newtonscat/time_grid.hpp"

namespace newtonscat {

enum class FlowSign { kPlus, kMinus };
enum class FreeBackend { kExactFixedPoint, kIterateN };

const char* to_string(FlowSign sign);

struct FreeFlowConfig {
  FlowSign sign = FlowSign::kPlus;
  double picard_tol = 1e-10;
  int max_iter = 200;
  FreeBackend backend = FreeBackend::kExactFixedPoint;
  /// Iterate count for kIterateN; 0 means floor(1/alpha).
  int iterate_order = 0;
};

struct SolverDiagnostics {
  int iterations = 0;
  /// Last residual sup |g(t)/t| between successive iterates.
  double residual = 0.0;
  std::vector<double> residual_history;
  /// Analytic bound on the error from truncating the time axis, in the same
  /// norm as the residual.
  double tail_error = 0.0;
  /// Constant C' of the linear deviation bound |z - x - h - tw| <= C'|t|.
  double deviation_constant = 0.0;
  /// max over nodes of |z - x - h - tw| / (C'|t|).
  double deviation_ratio = 0.0;
  std::vector<std::string> warnings;
};

/// Sampled trajectory with explicit times. Interpolation is panel-wise
/// Lagrange on the time grid when `grid` is set, cubic Hermite otherwise.
struct Trajectory {
  std::vector<double> times;
  Path positions;
  Path velocities;
  std::shared_ptr<const TimeGrid> grid;
  SolverDiagnostics diagnostics;

  std::size_t size() const { return times.size(); }
  int dim() const { return static_cast<int>(positions.rows()); }
  Vec position_at(double t) const;
  /// Columns t, x_1..x_n, v_1..v_n with a header row.
  void write_csv(std::ostream& out) const;
};

/// A long-range free flow stored as its deviation from the line
/// origin + t * w, which keeps full precision at large |t|.
struct FreeFlow {
  std::shared_ptr<const TimeGrid> grid;
  FlowSign sign = FlowSign::kPlus;
  Vec origin;  // x + h
  Vec w;
  Path deviation;        // at nodes
  Path deviation_edges;  // at panel edges
  Path rate;             // zdot - w at nodes
  SolverDiagnostics diagnostics;

  int dim() const { return static_cast<int>(origin.size()); }
  Vec position(std::size_t i) const { return origin + grid->time(i) * w + deviation.col(i); }
  /// All node positions (n x nodes).
  Path positions() const;
  Vec position_at(double t) const;
  Vec velocity_at(double t) const;
  Trajectory trajectory() const;
};

/// Checks the admissibility conditions of the free flows for reference data
/// (v, x) and offset h: |w - v| <= |v|/(4 sqrt2), |h| < 1 + |x|/sqrt2 and
/// 32 n max(beta1_long, beta2_long) / (alpha |v|^2 (1 + |x|/sqrt2 - |h|)^alpha) <= 1.
/// Throws InfeasibleError naming the first failed inequality.
void check_free_admissible(const DecayProfile& profile, const Vec& w, const Vec& v, const Vec& x,
                           const Vec& h);

/// C' = 2^(5/2) n^(1/2) beta1_long / (alpha |v| (1 + |x|/sqrt2 - |h|)^alpha).
double deviation_constant(const DecayProfile& profile, double speed, double x_norm, double h_norm);

/// Free flow z_+(w, x+h, .) or z_-(w, x+h, .) of zddot = F^l(z) on `grid`,
/// with asymptotic velocity w at +inf (resp. -inf) and z(0) = x + h.
/// `v` is the reference velocity of the admissibility conditions; when
/// absent v = w. With the iterate backend the result is z_{+-,N+1}.
FreeFlow solve_free(const ForceField& field, const Vec& w, const Vec& x, const Vec& h,
                    const FreeFlowConfig& cfg, std::shared_ptr<const TimeGrid> grid,
                    const std::optional<Vec>& v = std::nullopt);

/// floor(1/alpha), after nudging alpha = 1/m down by 1e-12 (reported through
/// *perturbed).
int iterate_count(double alpha, double* alpha_used = nullptr, bool* perturbed = nullptr);

struct IterateReport {
  int order = 0;  // N
  double alpha_used = 0.0;
  bool alpha_perturbed = false;
  /// Per iterate index m: max over nodes of observed / bound (0 if unused).
  std::vector<double> deviation_ratio;  // m = 1..N+1, linear deviation bound
  std::vector<double> increment_ratio;  // m = 0..N-1, power-law increment bound
  std::vector<double> linear_increment_ratio;  // m = 1..N, linear-in-t bound
  double final_increment_ratio = 0.0;  // |z_{N+1} - z_N| against its uniform bound
  double final_increment_bound = 0.0;
  bool pass = true;
};

struct FreeIterates {
  std::vector<FreeFlow> flows;  // z_0 .. z_{N+1}
  IterateReport report;
};

/// Explicit iterates z_{+-,0..N+1} of the free flow; estimates checked
/// node-wise and reported.
FreeIterates free_iterates(const ForceField& field, const Vec& w, const Vec& x, const Vec& h,
                           int order, FlowSign sign, std::shared_ptr<const TimeGrid> grid,
                           const std::optional<Vec>& v = std::nullopt);

/// Uniform bound on |z_{N+1} - z_N| for the given data.
double final_increment_bound(const DecayProfile& profile, int order, double alpha, double speed,
                             double x_norm, double h_norm);

struct BoundednessReport {
  double sup_difference = 0.0;
  bool growth = false;
};

/// sup over t > 0 of |x(t) - z(t)| on a shared time grid; growth is flagged
/// when the last 10% of nodes show the difference still rising by more than 1%.
BoundednessReport check_boundedness_vs_free(const Trajectory& x_traj, const Trajectory& z_traj);

}  // namespace newtonscat
