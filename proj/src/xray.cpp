#include "newtonscat/xray.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <ostream>

#include "newtonscat/errors.hpp"
#include "newtonscat/parallel.hpp"
#include "newtonscat/time_grid.hpp"

namespace newtonscat {

LineParam LineParam::make(const Vec& theta, const Vec& x) {
  if (theta.size() != x.size() || theta.size() < 2) throw DomainError("line needs theta and x in R^n, n >= 2");
  if (!theta.allFinite() || !x.allFinite()) throw DomainError("line parameters are not finite");
  if (std::abs(theta.norm() - 1.0) > 1e-14) throw DomainError("theta must be a unit vector");
  if (std::abs(theta.dot(x)) > 1e-12 * x.norm()) throw DomainError("x must be orthogonal to theta");
  return {theta, x};
}

LineParam LineParam::planar(double phi, double p) {
  LineParam l;
  l.theta = make_vec({std::cos(phi), std::sin(phi)});
  l.x = make_vec({-p * std::sin(phi), p * std::cos(phi)});
  return l;
}

namespace {

struct Rule {
  std::vector<double> nodes, weights;
};

const Rule& rule(int order) {
  static std::mutex mu;
  static std::map<int, Rule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(order);
  if (it == cache.end()) {
    Rule r;
    gauss_legendre(order, r.nodes, r.weights);
    it = cache.emplace(order, std::move(r)).first;
  }
  return it->second;
}

constexpr double kCoreU = 4.0, kCorePanel = 0.25, kFarPanel = 1.0;

std::vector<double> panel_edges(double u_max) {
  std::vector<double> pos{0.0};
  while (pos.back() < u_max - 1e-12) {
    const double w = pos.back() < kCoreU - 1e-12 ? kCorePanel : kFarPanel;
    pos.push_back(pos.back() + w);
  }
  std::vector<double> edges;
  for (auto it = pos.rbegin(); it != pos.rend(); ++it) edges.push_back(-*it);
  edges.insert(edges.end(), pos.begin() + 1, pos.end());
  return edges;
}

// Panel-wise Gauss-Legendre in u with t = sinh(u).
Eigen::VectorXd integrate_line(const VectorFn& f, int components, const LineParam& line,
                               const std::vector<double>& edges, int order, double* end_values) {
  const Rule& r = rule(order);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(components);
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    const double half = 0.5 * (edges[p + 1] - edges[p]), mid = 0.5 * (edges[p + 1] + edges[p]);
    for (int k = 0; k < order; ++k) {
      const double u = mid + half * r.nodes[static_cast<std::size_t>(k)];
      const double t = std::sinh(u);
      const Vec y = t * line.theta + line.x;
      const Vec v = f(y);
      if (v.size() != components) throw DomainError("field returned the wrong number of components");
      sum += (r.weights[static_cast<std::size_t>(k)] * half * std::cosh(u)) * Eigen::VectorXd(v);
    }
  }
  if (end_values) {
    for (int side = 0; side < 2; ++side) {
      const double t = std::sinh(side ? edges.back() : edges.front());
      end_values[side] = f(Vec(t * line.theta + line.x)).norm();
    }
  }
  return sum;
}

}  // namespace

XrayValue xray_transform(const VectorFn& f, int components, double decay, const LineParam& line) {
  if (!(decay > 1.0)) throw DomainError("the X-ray transform needs decay exponent > 1");
  if (components < 1) throw DomainError("need at least one component");
  // At least |t| = 1e3 so fast-decaying fields with large constants are covered.
  const double u_max = std::clamp(default_u_max(decay - 1.0, 1e-16), std::asinh(1e3), 300.0);
  const auto edges = panel_edges(u_max);
  double ends[2] = {0.0, 0.0};
  XrayValue out;
  out.value = integrate_line(f, components, line, edges, 16, ends);
  const Eigen::VectorXd coarse = integrate_line(f, components, line, edges, 10, nullptr);
  const double T = std::sinh(edges.back());
  // |f| <= C (1 + |t|)^-decay beyond the last node with C = |f(T)| (1 + T)^decay.
  double tail = 0.0;
  for (double e : ends) tail += e * (1.0 + T) / (decay - 1.0);
  out.error_bar = (out.value - coarse).norm() + tail;
  return out;
}

double xray_transform(const ScalarFn& f, double decay, const LineParam& line) {
  VectorFn g = [&](const Vec& y) {
    Vec v(1);
    v(0) = f(y);
    return v;
  };
  return xray_transform(g, 1, decay, line).value(0);
}

Vec xray_force(const ForceField& field, FieldPart part, const LineParam& line) {
  const double a = field.profile().alpha;
  VectorFn g;
  double decay = a + 1.0;
  switch (part) {
    case FieldPart::kLong: g = [&](const Vec& y) { return field.long_force(y); }; break;
    case FieldPart::kShort:
      g = [&](const Vec& y) { return field.short_force(y); };
      decay = a + 2.0;
      break;
    case FieldPart::kTotal: g = [&](const Vec& y) { return field.force(y); }; break;
  }
  return Vec(xray_transform(g, field.dim(), decay, line).value);
}

double xray_potential(const ForceField& field, FieldPart part, const LineParam& line) {
  const double a = field.profile().alpha;
  switch (part) {
    case FieldPart::kShort:
      return xray_transform([&](const Vec& y) { return field.short_potential(y); }, a + 1.0, line);
    case FieldPart::kLong:
      return xray_transform([&](const Vec& y) { return field.long_potential(y); }, a, line);
    case FieldPart::kTotal:
      return xray_transform([&](const Vec& y) { return field.potential(y); }, a, line);
  }
  return 0.0;
}

double Sinogram::offset_spacing() const {
  return offsets.size() > 1 ? offsets[1] - offsets[0] : 0.0;
}

Sinogram Sinogram::layout(int angle_count, int offset_count, double offset_max, int components) {
  if (angle_count < 1 || offset_count < 1 || components < 1)
    throw DomainError("sinogram counts must be positive");
  if (!(offset_max >= 0.0)) throw DomainError("offset_max must be nonnegative");
  Sinogram s;
  for (int i = 0; i < angle_count; ++i) s.angles.push_back(M_PI * i / angle_count);
  for (int j = 0; j < offset_count; ++j)
    s.offsets.push_back(offset_count == 1 ? 0.0 : -offset_max + 2.0 * offset_max * j / (offset_count - 1));
  s.values.assign(static_cast<std::size_t>(components), Eigen::MatrixXd::Zero(angle_count, offset_count));
  return s;
}

void Sinogram::write_csv(std::ostream& out) const {
  out << "angle,offset";
  for (int c = 0; c < components(); ++c) out << ",value_" << c + 1;
  out << '\n';
  out.precision(17);
  for (std::size_t i = 0; i < angles.size(); ++i)
    for (std::size_t j = 0; j < offsets.size(); ++j) {
      out << angles[i] << ',' << offsets[j];
      for (const auto& v : values) out << ',' << v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      out << '\n';
    }
}

Sinogram sample_sinogram(const VectorFn& f, int components, double decay, int angle_count,
                         int offset_count, double offset_max, int jobs) {
  Sinogram s = Sinogram::layout(angle_count, offset_count, offset_max, components);
  const std::size_t m = s.offsets.size();
  const auto rows = parallel_map<Eigen::VectorXd>(s.angles.size() * m, jobs, [&](std::size_t k) {
    return xray_transform(f, components, decay, s.line(k / m, k % m)).value;
  });
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (int c = 0; c < components; ++c)
      s.values[static_cast<std::size_t>(c)](static_cast<Eigen::Index>(k / m), static_cast<Eigen::Index>(k % m)) = rows[k](c);
  return s;
}

Sinogram sample_sinogram(const ScalarFn& f, double decay, int angle_count, int offset_count,
                         double offset_max, int jobs) {
  VectorFn g = [&](const Vec& y) {
    Vec v(1);
    v(0) = f(y);
    return v;
  };
  return sample_sinogram(g, 1, decay, angle_count, offset_count, offset_max, jobs);
}

std::vector<double> ReconGrid::coordinates() const {
  if (size < 1 || !(half_width > 0.0)) throw DomainError("reconstruction grid must be nonempty");
  std::vector<double> xs(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) xs[static_cast<std::size_t>(i)] = -half_width + spacing() * (i + 0.5);
  return xs;
}

std::vector<Eigen::MatrixXd> sample_on_grid(const VectorFn& f, int components, const ReconGrid& grid) {
  const auto xs = grid.coordinates();
  std::vector<Eigen::MatrixXd> out(static_cast<std::size_t>(components), Eigen::MatrixXd(grid.size, grid.size));
  for (int i = 0; i < grid.size; ++i)
    for (int j = 0; j < grid.size; ++j) {
      const Vec v = f(make_vec({xs[static_cast<std::size_t>(j)], xs[static_cast<std::size_t>(i)]}));
      for (int c = 0; c < components; ++c) out[static_cast<std::size_t>(c)](i, j) = v(c);
    }
  return out;
}

double relative_l2(const std::vector<Eigen::MatrixXd>& a, const std::vector<Eigen::MatrixXd>& b) {
  if (a.size() != b.size()) throw UsageError("component counts differ");
  double num = 0.0, den = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    if (a[c].rows() != b[c].rows() || a[c].cols() != b[c].cols()) throw UsageError("grid shapes differ");
    num += (a[c] - b[c]).squaredNorm();
    den += b[c].squaredNorm();
  }
  return std::sqrt(num / (den > 0.0 ? den : 1.0));
}

}  // namespace newtonscat
