#pragma once

#include <Eigen/Dense>

namespace newtonscat {

/// Largest spatial dimension supported by the stack-allocated point type.
inline constexpr int kMaxDim = 6;

/// A point or vector in R^n, n <= kMaxDim, without heap allocation.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor,
                          kMaxDim, kMaxDim>;

/// Vector-valued samples over a time grid: one column per node, one row per
/// spatial component.
using Path = Eigen::MatrixXd;

inline Vec zero_vec(int n) { return Vec::Zero(n); }

inline Vec make_vec(std::initializer_list<double> values) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

}  // namespace newtonscat
