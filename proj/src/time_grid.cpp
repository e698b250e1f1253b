#include "newtonscat/time_grid.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "newtonscat/errors.hpp"

namespace newtonscat {

double default_u_max(double alpha, double tail_tol) {
  if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
  const double u = std::asinh(std::pow(tail_tol, -1.0 / alpha));
  return std::min(std::ceil(u), 300.0);
}

GridSpec grid_for_speed(double speed, double alpha, double length) {
  if (!(speed > 0.0)) throw DomainError("grid speed must be positive");
  GridSpec g;
  g.time_scale = length / speed;
  g.u_max = default_u_max(alpha);
  return g;
}

void gauss_legendre(int order, std::vector<double>& nodes, std::vector<double>& weights) {
  if (order < 1) throw DomainError("quadrature order must be positive");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  nodes.resize(order);
  weights.resize(order);
  for (int k = 0; k < order; ++k) {
    nodes[k] = es.eigenvalues()(k);
    const double v0 = es.eigenvectors()(0, k);
    weights[k] = 2.0 * v0 * v0;
  }
}

namespace {

// Legendre P_0..P_{m} and derivatives at x.
void legendre_all(int m, double x, std::vector<double>& p, std::vector<double>& dp) {
  p.assign(m + 2, 0.0);
  dp.assign(m + 2, 0.0);
  p[0] = 1.0;
  if (m + 1 >= 1) {
    p[1] = x;
    dp[1] = 1.0;
  }
  for (int k = 1; k <= m; ++k) {
    p[k + 1] = ((2.0 * k + 1.0) * x * p[k] - k * p[k - 1]) / (k + 1.0);
    dp[k + 1] = dp[k - 1] + (2.0 * k + 1.0) * p[k];
  }
}

}  // namespace

TimeGrid::TimeGrid(const GridSpec& spec) : spec_(spec) {
  if (!(spec.time_scale > 0.0) || !(spec.u_max > 0.0) || !(spec.core_panel > 0.0) ||
      !(spec.far_panel > 0.0) || spec.order < 2 || spec.core_u < 0.0)
    throw DomainError("invalid grid spec");
  // Edges in u, built outward from 0 and mirrored.
  std::vector<double> pos{0.0};
  while (pos.back() < spec.u_max - 1e-12) {
    const double width = pos.back() < spec.core_u - 1e-12 ? spec.core_panel : spec.far_panel;
    pos.push_back(std::min(pos.back() + width, std::max(spec.u_max, pos.back() + 0.5 * width)));
  }
  edges_u_.clear();
  for (auto it = pos.rbegin(); it != pos.rend(); ++it) edges_u_.push_back(-*it);
  for (std::size_t k = 1; k < pos.size(); ++k) edges_u_.push_back(pos[k]);
  zero_edge_ = pos.size() - 1;
  for (double u : edges_u_) edge_times_.push_back(spec.time_scale * std::sinh(u));
  edge_times_[zero_edge_] = 0.0;

  const int p = spec.order;
  gauss_legendre(p, xi_, w_ref_);

  // Legendre-basis operators: Lagrange functions l_m = sum_k C(k, m) P_k.
  Eigen::MatrixXd vander(p, p), dvander(p, p), left(p, p);
  std::vector<double> lp, ldp;
  for (int j = 0; j < p; ++j) {
    legendre_all(p, xi_[j], lp, ldp);
    for (int k = 0; k < p; ++k) {
      vander(j, k) = lp[k];
      dvander(j, k) = ldp[k];
      // int_{-1}^{x} P_k = (P_{k+1} - P_{k-1}) / (2k+1), with P_{-1} := -1.
      left(j, k) = k == 0 ? xi_[j] + 1.0 : (lp[k + 1] - lp[k - 1]) / (2.0 * k + 1.0);
    }
  }
  const Eigen::MatrixXd coeffs = vander.inverse();
  left_integral_ = left * coeffs;
  right_integral_.resize(p, p);
  for (int j = 0; j < p; ++j)
    for (int m = 0; m < p; ++m) right_integral_(j, m) = w_ref_[m] - left_integral_(j, m);
  diff_ = dvander * coeffs;

  bary_.resize(p);
  for (int j = 0; j < p; ++j) {
    double prod = 1.0;
    for (int m = 0; m < p; ++m)
      if (m != j) prod *= xi_[j] - xi_[m];
    bary_[j] = 1.0 / prod;
  }

  const std::size_t panels = edges_u_.size() - 1;
  times_.resize(panels * p);
  weights_.resize(panels * p);
  dt_du_.resize(panels * p);
  fwd_ops_.resize(panels);
  bwd_ops_.resize(panels);
  for (std::size_t k = 0; k < panels; ++k) {
    const double half = 0.5 * (edges_u_[k + 1] - edges_u_[k]);
    const double mid = 0.5 * (edges_u_[k + 1] + edges_u_[k]);
    Eigen::VectorXd scale(p);
    for (int j = 0; j < p; ++j) {
      const double u = mid + half * xi_[j];
      const std::size_t i = k * p + j;
      times_[i] = spec.time_scale * std::sinh(u);
      dt_du_[i] = spec.time_scale * std::cosh(u);
      weights_[i] = w_ref_[j] * half * dt_du_[i];
      scale(j) = half * dt_du_[i];
    }
    // (n x p) block times op gives the (n x p) cumulative block.
    fwd_ops_[k] = scale.asDiagonal() * left_integral_.transpose();
    bwd_ops_[k] = scale.asDiagonal() * right_integral_.transpose();
  }
}

Path TimeGrid::cumulative_forward(const Path& g, Path* edges) const {
  const int p = order();
  const std::size_t panels = this->panels();
  Path out(g.rows(), g.cols());
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(g.rows());
  if (edges) {
    edges->resize(g.rows(), panels + 1);
    edges->col(0) = acc;
  }
  for (std::size_t k = 0; k < panels; ++k) {
    const auto block = g.middleCols(k * p, p);
    out.middleCols(k * p, p) = block * fwd_ops_[k];
    out.middleCols(k * p, p).colwise() += acc;
    for (int j = 0; j < p; ++j) acc += weights_[k * p + j] * block.col(j);
    if (edges) edges->col(k + 1) = acc;
  }
  return out;
}

Path TimeGrid::cumulative_backward(const Path& g, Path* edges) const {
  const int p = order();
  const std::size_t panels = this->panels();
  Path out(g.rows(), g.cols());
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(g.rows());
  if (edges) {
    edges->resize(g.rows(), panels + 1);
    edges->col(panels) = acc;
  }
  for (std::size_t k = panels; k-- > 0;) {
    const auto block = g.middleCols(k * p, p);
    out.middleCols(k * p, p) = block * bwd_ops_[k];
    out.middleCols(k * p, p).colwise() += acc;
    for (int j = 0; j < p; ++j) acc += weights_[k * p + j] * block.col(j);
    if (edges) edges->col(k) = acc;
  }
  return out;
}

Path TimeGrid::cumulative_from_zero(const Path& g, Path* edges) const {
  const int p = order();
  const std::size_t panels = this->panels();
  Path out(g.rows(), g.cols());
  if (edges) edges->resize(g.rows(), panels + 1);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(g.rows());
  if (edges) edges->col(zero_edge_) = acc;
  for (std::size_t k = zero_edge_; k < panels; ++k) {
    const auto block = g.middleCols(k * p, p);
    out.middleCols(k * p, p) = block * fwd_ops_[k];
    out.middleCols(k * p, p).colwise() += acc;
    for (int j = 0; j < p; ++j) acc += weights_[k * p + j] * block.col(j);
    if (edges) edges->col(k + 1) = acc;
  }
  acc.setZero();
  for (std::size_t k = zero_edge_; k-- > 0;) {
    const auto block = g.middleCols(k * p, p);
    out.middleCols(k * p, p) = -(block * bwd_ops_[k]);
    out.middleCols(k * p, p).colwise() += acc;
    for (int j = 0; j < p; ++j) acc -= weights_[k * p + j] * block.col(j);
    if (edges) edges->col(k) = acc;
  }
  return out;
}

Eigen::VectorXd TimeGrid::integrate(const Path& g) const {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(g.rows());
  for (std::size_t i = 0; i < size(); ++i) acc += weights_[i] * g.col(i);
  return acc;
}

Eigen::VectorXd TimeGrid::integrate_half(const Path& g, bool past) const {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(g.rows());
  const std::size_t split = first_future_node();
  const std::size_t lo = past ? 0 : split, hi = past ? split : size();
  for (std::size_t i = lo; i < hi; ++i) acc += weights_[i] * g.col(i);
  return acc;
}

std::size_t TimeGrid::panel_of_time(double t) const {
  auto it = std::upper_bound(edge_times_.begin(), edge_times_.end(), t);
  std::size_t k = it == edge_times_.begin() ? 0 : static_cast<std::size_t>(it - edge_times_.begin()) - 1;
  return std::min(k, panels() - 1);
}

Eigen::VectorXd TimeGrid::interpolate(const Path& values, double t) const {
  const int p = order();
  const std::size_t k = panel_of_time(t);
  const double u = std::asinh(t / spec_.time_scale);
  const double xi = (2.0 * u - edges_u_[k] - edges_u_[k + 1]) / (edges_u_[k + 1] - edges_u_[k]);
  Eigen::VectorXd num = Eigen::VectorXd::Zero(values.rows());
  double den = 0.0;
  for (int j = 0; j < p; ++j) {
    const double d = xi - xi_[j];
    if (d == 0.0) return values.col(k * p + j);
    const double c = bary_[j] / d;
    num += c * values.col(k * p + j);
    den += c;
  }
  return num / den;
}

Path TimeGrid::derivative(const Path& values) const {
  const int p = order();
  Path out(values.rows(), values.cols());
  for (std::size_t k = 0; k < panels(); ++k) {
    const double half = 0.5 * (edges_u_[k + 1] - edges_u_[k]);
    out.middleCols(k * p, p) = values.middleCols(k * p, p) * diff_.transpose();
    for (int j = 0; j < p; ++j) out.col(k * p + j) /= half * dt_du_[k * p + j];
  }
  return out;
}

double TimeGrid::sup_norm(const Path& values, const Path* edges, bool past) const {
  double s = 0.0;
  const std::size_t split = first_future_node();
  const std::size_t lo = past ? 0 : split, hi = past ? split : size();
  for (std::size_t i = lo; i < hi; ++i) s = std::max(s, values.col(i).norm());
  if (edges) {
    const std::size_t elo = past ? 0 : zero_edge_, ehi = past ? zero_edge_ + 1 : panels() + 1;
    for (std::size_t e = elo; e < ehi; ++e) s = std::max(s, edges->col(e).norm());
  }
  return s;
}

}  // namespace newtonscat
