#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "newtonscat/estimates.hpp"
#include "newtonscat/free_dynamics.hpp"
#include "newtonscat/potentials.hpp"
#include "newtonscat/time_grid.hpp"

namespace newtonscat {

/// Parametrization of the scattering solutions.
///   kStandard  incoming asymptote z_-(v_-, t) + x_-, outgoing z_+(a, t) + b
///   kModified  free flows through the impact point: z_-(v_-, x_-, t) in,
///              z_+(a, b, t) out
///   kIterateN  standard data with the free flows replaced by their explicit
///              iterates of order N + 1 = floor(1/alpha) + 1
///   kOracle    label for data produced by direct integration
enum class Flavor { kStandard, kModified, kIterateN, kOracle };

const char* to_string(Flavor flavor);
Flavor flavor_from_string(const std::string& name);

/// Discretized element of M_r: a continuous path f with norm
/// sup_{t<=0} |f| + sup_{t>=0} |f(t)|/(1+t), evaluated on nodes and panel edges.
struct MrFunction {
  std::shared_ptr<const TimeGrid> grid;
  Path values;
  Path edges;
  Path rates;  // f' at nodes when known, else empty
  double r = 0.5;
  double error_bar = 0.0;

  int dim() const { return static_cast<int>(values.rows()); }
  double norm() const;
  Vec at_zero() const { return edges.col(static_cast<Eigen::Index>(grid->zero_edge())); }

  static MrFunction zero(std::shared_ptr<const TimeGrid> grid, int dim, double r);
};

double mr_norm(const TimeGrid& grid, const Path& values, const Path* edges);

struct ScatterConfig {
  /// Ball radius; 0 selects default_radius().
  double r = 0.0;
  /// Halvings of r tried when the self-map condition fails.
  int radius_halvings = 3;
  double picard_tol = 1e-14;
  int max_iter = 200;
  /// Free flows inside the pipeline.
  double free_tol = 1e-13;
  int free_max_iter = 200;
  /// Time grid: t = grid_length / |v_-| * sinh(u).
  double grid_length = 1.0;
  double core_panel = 0.25;
  double far_panel = 1.0;
  int grid_order = 10;
  /// Enforce |v_-| >= mu and rho <= r, lambda < 1 before iterating.
  bool check_preconditions = true;
  /// Compute W (or its variants) during assembly.
  bool compute_w = true;
  /// Estimate the quadrature error of W by re-solving on a refined grid.
  bool refine_w = false;
};

std::shared_ptr<const TimeGrid> make_scatter_grid(double speed, double alpha, const ScatterConfig& cfg);

/// The incoming integral operator for one flavor. Its image of f is
///   int_{-inf}^t int_{-inf}^s F(base + f) - F^l(ref) dtau ds
/// where base'' = F^l(ref):
///   standard  base = z_-(v_-) + x_-,          ref = z_-(v_-)
///   modified  base = ref = z_-(v_-, x_-)
///   iterate   base = z_{-,N+1}(v_-) + x_-,    ref = z_{-,N}(v_-)
class IncomingOperator {
 public:
  IncomingOperator(ForceField field, const Vec& v_minus, const Vec& x_minus, Flavor flavor,
                   const ScatterConfig& cfg = {}, std::shared_ptr<const TimeGrid> grid = nullptr);

  const ForceField& field() const { return field_; }
  Flavor flavor() const { return flavor_; }
  const Vec& v_minus() const { return v_; }
  /// x_- after re-projection onto v_-^perp.
  const Vec& x_minus() const { return x_; }
  std::shared_ptr<const TimeGrid> grid() const { return grid_; }
  const ScatterConfig& config() const { return cfg_; }
  int order() const { return order_; }

  /// Base path at nodes (positions).
  const Path& base() const { return base_; }
  /// F^l(ref) at nodes.
  const Path& ref_force() const { return ref_force_; }
  const FreeFlow& incoming_flow() const { return incoming_; }
  /// z_{-,N} for the iterate flavor, else the incoming flow.
  const FreeFlow& reference_flow() const { return reference_ ? *reference_ : incoming_; }

  /// Integrand F(base + f) - F^l(ref) at nodes.
  Path integrand(const Path& f) const;
  /// A(f) with values, edges, rates and an analytic truncation error bar.
  MrFunction apply(const MrFunction& f) const;

 private:
  ForceField field_;
  Vec v_, x_;
  Flavor flavor_;
  ScatterConfig cfg_;
  std::shared_ptr<const TimeGrid> grid_;
  int order_ = 0;
  FreeFlow incoming_;
  std::optional<FreeFlow> reference_;
  Path base_;
  Path ref_force_;
};

/// Projects x onto v^perp when |v.x| <= 1e-12 |v||x|; throws InfeasibleError
/// otherwise.
Vec project_orthogonal(const Vec& v, const Vec& x);

/// Image of f under the incoming operator.
MrFunction apply_A(const ForceField& field, const Vec& v_minus, const Vec& x_minus,
                   const MrFunction& f, Flavor flavor, const ScatterConfig& cfg = {});

struct IncomingSolution {
  MrFunction y_minus;
  BoundConstants constants;
  std::vector<double> residuals;
  /// Largest ratio of successive residuals while above the noise floor.
  double measured_ratio = 0.0;
  int iterations = 0;
  std::vector<std::string> warnings;
};

/// Picard fixed point of the incoming operator in M_r.
IncomingSolution solve_y_minus(const IncomingOperator& op);
IncomingSolution solve_y_minus(const ForceField& field, const Vec& v_minus, const Vec& x_minus,
                               Flavor flavor, const ScatterConfig& cfg = {});

/// One closed-form estimate evaluated against its observed left side.
struct EstimateCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = true;
};

struct ScatteringDatum {
  Flavor flavor = Flavor::kStandard;
  Vec v_minus, x_minus;
  Vec a, b, a_sc, b_sc;
  /// Breakdown b_sc = l + l1 + l2. For the modified flavor l1 = 0 and l2 is
  /// the h-dependent part of the outgoing map at its fixed point.
  Vec l, l1, l2;
  /// W, W_N or W~ depending on flavor; empty when not computed.
  Vec w;
  double w_error = 0.0;
  std::vector<double> y_plus_times;
  Path y_plus;
  double r = 0.0;
  int iterations = 0;
  double energy_error = 0.0;  // ||a| - |v_-|| / |v_-|
  double decomposition_residual = 0.0;
  /// Smallness condition of the estimate theorem holds.
  bool guaranteed = true;
  /// Modified flavor: fixed-point data of the outgoing map.
  double g_contraction = 0.0;
  double g_ball = 0.0;
  std::vector<EstimateCheck> checks;
  std::vector<std::string> warnings;
};

/// Assembles (a, b), breakdown, y_+ and the estimate checks from a fixed point.
ScatteringDatum assemble_scattering_data(const IncomingOperator& op, const IncomingSolution& sol);

/// Operator construction, fixed point, assembly.
ScatteringDatum scatter(const ForceField& field, const Vec& v_minus, const Vec& x_minus,
                        Flavor flavor, const ScatterConfig& cfg = {});

struct WVector {
  Vec value;
  double error_bar = 0.0;
};

/// W (standard), W_N (iterate) or W~ (modified) for a completed datum.
/// Re-solves the free flows; with cfg.refine_w the error bar is the change
/// under grid refinement.
WVector compute_W(const ForceField& field, const ScatteringDatum& datum, const ScatterConfig& cfg = {});

/// The outgoing map of the modified parametrization,
/// G(h) = l~ - int_0^inf tau (F^l(x(tau)) - F^l(z_+(a~, x_- + h, tau))) dtau.
class ModifiedMap {
 public:
  ModifiedMap(const IncomingOperator& op, const MrFunction& y_minus);
  Vec operator()(const Vec& h) const;
  const Vec& a_tilde() const { return a_tilde_; }
  const Vec& a_tilde_sc() const { return a_tilde_sc_; }
  const Vec& l_tilde() const { return l_tilde_; }
  /// Radius 1/4 + |x_-|/2^(5/2) of the invariant ball.
  double ball_radius() const;
  /// z_+(a~, x_- + h, .)
  FreeFlow outgoing(const Vec& h) const;

 private:
  const IncomingOperator& op_;
  Path path_;        // x(t) at nodes
  Path long_force_;  // F^l(x(t)) at nodes
  Vec a_tilde_, a_tilde_sc_, l_tilde_;
};

struct ModifiedFixedPoint {
  Vec b_tilde_sc;
  Vec b_tilde;
  double contraction_measured = 0.0;
  double ball_radius = 0.0;
  int iterations = 0;
  std::vector<double> steps;
};

/// Fixed point of the modified outgoing map. Throws InfeasibleError when the
/// smallness condition of the modified map fails and NumericError if the
/// iterate leaves the invariant ball.
ModifiedFixedPoint solve_b_tilde(const IncomingOperator& op, const MrFunction& y_minus);

/// int_0^inf tau g(tau) dtau and int_{-inf}^0 (-tau) g(tau) dtau over grid nodes.
Eigen::VectorXd future_moment(const TimeGrid& grid, const Path& g);
Eigen::VectorXd past_moment(const TimeGrid& grid, const Path& g);

}  // namespace newtonscat
