#pragma once

#include "newtonscat/potentials.hpp"
#include "newtonscat/vector.hpp"

namespace newtonscat::detail {

inline Path long_forces(const ForceField& field, const Path& x) {
  Path out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.cols(); ++i) out.col(i) = field.long_force(Vec(x.col(i)));
  return out;
}

inline Path short_forces(const ForceField& field, const Path& x) {
  Path out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.cols(); ++i) out.col(i) = field.short_force(Vec(x.col(i)));
  return out;
}

inline Path shifted(const Path& x, const Vec& shift) {
  Path out = x;
  out.colwise() += Eigen::VectorXd(shift);
  return out;
}

}  // namespace newtonscat::detail
