#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "newtonscat/potentials.hpp"
#include "newtonscat/vector.hpp"

namespace newtonscat {

/// A line {t theta + x} with |theta| = 1 and theta . x = 0.
struct LineParam {
  Vec theta;
  Vec x;

  /// Validates the tangent-bundle conditions; throws DomainError.
  static LineParam make(const Vec& theta, const Vec& x);
  /// Planar line at angle phi: theta = (cos phi, sin phi), x = p (-sin phi, cos phi).
  static LineParam planar(double phi, double p);
};

using ScalarFn = std::function<double(const Vec&)>;
using VectorFn = std::function<Vec(const Vec&)>;

struct XrayValue {
  Eigen::VectorXd value;
  /// Tail bound plus the change against a half-resolution rule.
  double error_bar = 0.0;
};

/// int f(t theta + x) dt for f = O(|y|^-decay), decay > 1, on a
/// sinh-graded Gauss-Legendre grid in t. Throws DomainError for decay <= 1.
XrayValue xray_transform(const VectorFn& f, int components, double decay, const LineParam& line);
double xray_transform(const ScalarFn& f, double decay, const LineParam& line);

enum class FieldPart { kLong, kShort, kTotal };

/// PF^l, PF^s or PF along a line.
Vec xray_force(const ForceField& field, FieldPart part, const LineParam& line);
/// PV^s or PV^l (the latter only for alpha > 1, i.e. never for valid fields).
double xray_potential(const ForceField& field, FieldPart part, const LineParam& line);

/// Samples on angles phi_i = i pi / angle_count and offsets spread evenly
/// over [-offset_max, offset_max]. values[c](i, j) holds component c.
struct Sinogram {
  std::vector<double> angles;
  std::vector<double> offsets;
  std::vector<Eigen::MatrixXd> values;

  int components() const { return static_cast<int>(values.size()); }
  double offset_spacing() const;
  LineParam line(std::size_t i, std::size_t j) const { return LineParam::planar(angles[i], offsets[j]); }
  /// Empty sinogram with the given layout, all values zero.
  static Sinogram layout(int angle_count, int offset_count, double offset_max, int components);
  /// Rows: angle, offset, value_1..value_c.
  void write_csv(std::ostream& out) const;
};

/// Dense sampling of xray_transform over the grid, evaluated on `jobs` threads
/// with deterministic ordering.
Sinogram sample_sinogram(const VectorFn& f, int components, double decay, int angle_count,
                         int offset_count, double offset_max, int jobs = 1);
Sinogram sample_sinogram(const ScalarFn& f, double decay, int angle_count, int offset_count,
                         double offset_max, int jobs = 1);

/// Square reconstruction grid of `size` x `size` pixel centers covering
/// [-half_width, half_width]^2. values(i, j) sits at (xs[j], xs[i]).
struct ReconGrid {
  int size = 128;
  double half_width = 3.0;
  std::vector<double> coordinates() const;
  double spacing() const { return 2.0 * half_width / size; }
};

struct FbpResult {
  std::vector<double> xs;
  std::vector<Eigen::MatrixXd> values;  // one per sinogram component
  std::vector<std::string> warnings;
};

/// Filtered back-projection (Ram-Lak kernel with a Hann window, FFT
/// convolution, linear interpolation in offset). Undersampling produces
/// warnings, not errors.
FbpResult invert_fbp_2d(const Sinogram& sino, const ReconGrid& grid);

/// Samples a field on the reconstruction grid, one matrix per component.
std::vector<Eigen::MatrixXd> sample_on_grid(const VectorFn& f, int components, const ReconGrid& grid);

/// sqrt(sum |a - b|^2 / sum |b|^2) over all components; the denominator is
/// replaced by 1 when b vanishes.
double relative_l2(const std::vector<Eigen::MatrixXd>& a, const std::vector<Eigen::MatrixXd>& b);

}  // namespace newtonscat
