#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "newtonscat/vector.hpp"

namespace newtonscat {

/// Layout of a graded time grid. Time is t = time_scale * sinh(u) with u
/// covering [-u_max, u_max] in Gauss-Legendre panels: `core_panel` wide for
/// |u| <= core_u, `far_panel` wide outside. u = 0 (t = 0) is always a panel
/// edge.
struct GridSpec {
  double time_scale = 1.0;
  double u_max = 36.0;
  double core_u = 4.0;
  double core_panel = 0.25;
  double far_panel = 1.0;
  int order = 10;

  bool operator==(const GridSpec&) const = default;
};

/// Smallest u_max for which integrands decaying like |t|^-(1+alpha) lose
/// less than `tail_tol` (relative) beyond the truncated range.
double default_u_max(double alpha, double tail_tol = 1e-15);

/// Grid spec for trajectories moving at `speed` through features of size
/// `length`, resolving long-range tails of exponent alpha.
GridSpec grid_for_speed(double speed, double alpha, double length = 1.0);

/// Gauss-Legendre nodes and weights on [-1, 1] (Golub-Welsch).
void gauss_legendre(int order, std::vector<double>& nodes, std::vector<double>& weights);

/// Piecewise-spectral representation of functions of time on a sinh-graded
/// grid. Values live at Gauss-Legendre nodes inside each panel; cumulative
/// integrals are exact for panel-wise polynomials of degree < order in u and
/// also return values at panel edges.
class TimeGrid {
 public:
  explicit TimeGrid(const GridSpec& spec);

  const GridSpec& spec() const { return spec_; }
  std::size_t size() const { return times_.size(); }
  std::size_t panels() const { return edges_u_.size() - 1; }
  int order() const { return spec_.order; }

  const std::vector<double>& times() const { return times_; }
  double time(std::size_t i) const { return times_[i]; }
  const std::vector<double>& edge_times() const { return edge_times_; }
  /// Index of the edge at t = 0.
  std::size_t zero_edge() const { return zero_edge_; }
  /// First node with t > 0.
  std::size_t first_future_node() const { return zero_edge_ * order(); }
  double t_min() const { return edge_times_.front(); }
  double t_max() const { return edge_times_.back(); }
  /// Quadrature weight of node i for integrals in t.
  double weight(std::size_t i) const { return weights_[i]; }

  /// int_{t_min}^{t} g at nodes; edge values written to *edges when given.
  Path cumulative_forward(const Path& g, Path* edges = nullptr) const;
  /// int_{t}^{t_max} g.
  Path cumulative_backward(const Path& g, Path* edges = nullptr) const;
  /// int_0^t g, negative orientation for t < 0.
  Path cumulative_from_zero(const Path& g, Path* edges = nullptr) const;
  /// int over the whole grid.
  Eigen::VectorXd integrate(const Path& g) const;
  /// int over t <= 0 (past = true) or t >= 0.
  Eigen::VectorXd integrate_half(const Path& g, bool past) const;

  /// Panel-wise polynomial interpolation in u. Outside the grid the nearest
  /// panel polynomial is extrapolated.
  Eigen::VectorXd interpolate(const Path& values, double t) const;
  /// d/dt by panel-wise spectral differentiation.
  Path derivative(const Path& values) const;

  /// Sup over nodes (and the given edge values) of the column norms, restricted
  /// to t <= 0 or t >= 0.
  double sup_norm(const Path& values, const Path* edges, bool past) const;

 private:
  std::size_t panel_of_time(double t) const;

  GridSpec spec_;
  std::vector<double> edges_u_;
  std::vector<double> edge_times_;
  std::vector<double> times_;
  std::vector<double> weights_;
  std::vector<double> dt_du_;
  std::size_t zero_edge_ = 0;
  // Reference-panel operators on [-1, 1].
  std::vector<double> xi_;
  std::vector<double> w_ref_;
  std::vector<double> bary_;
  Eigen::MatrixXd left_integral_;   // S(j, m) = int_{-1}^{xi_j} l_m
  Eigen::MatrixXd right_integral_;  // int_{xi_j}^{1} l_m
  Eigen::MatrixXd diff_;            // D(j, m) = l_m'(xi_j)
  // Per-panel operators acting on row-major node blocks (n x p) * op.
  std::vector<Eigen::MatrixXd> fwd_ops_;
  std::vector<Eigen::MatrixXd> bwd_ops_;
};

}  // namespace newtonscat
