#include "newtonscat/reconstruction.hpp"

#include <algorithm>
#include <cmath>

#include "newtonscat/errors.hpp"
#include "newtonscat/parallel.hpp"

namespace newtonscat {

const char* to_string(ReconTarget target) {
  return target == ReconTarget::kForceFromA ? "force_from_a" : "potential_from_b";
}

ReconTarget recon_target_from_string(const std::string& name) {
  if (name == "force_from_a") return ReconTarget::kForceFromA;
  if (name == "potential_from_b") return ReconTarget::kPotentialFromB;
  throw ConfigError("unknown reconstruction target '" + name + "'");
}

ReconstructionResult reconstruct_short_range(const ForceField& field, const ReconstructionSpec& spec) {
  if (field.dim() != 2) throw DomainError("reconstruction is implemented for n = 2 only");
  if (spec.ladder_factors.empty()) throw DomainError("empty ladder");
  for (double f : spec.ladder_factors)
    if (!(f > 1.0)) throw DomainError("ladder factors must exceed 1 (speeds above the threshold)");
  if (spec.flavor == Flavor::kOracle) throw UsageError("reconstruction needs a solver flavor");

  const bool force = spec.target == ReconTarget::kForceFromA;
  const int comps = force ? 2 : 1;
  ReconstructionResult res;
  res.data = Sinogram::layout(spec.angle_count, spec.offset_count, spec.offset_max, comps);
  res.exact = res.data;
  const std::size_t m = res.data.offsets.size();
  const Flavor threshold_flavor = spec.flavor == Flavor::kModified ? Flavor::kModified : Flavor::kStandard;

  struct LineData {
    Eigen::VectorXd data, exact;
    double s_max = 0.0;
  };
  SweepOptions opts;
  opts.extrapolation_order = spec.extrapolation_order;
  opts.targets = false;
  const auto lines = parallel_map<LineData>(res.data.angles.size() * m, spec.jobs, [&](std::size_t k) {
    const LineParam line = res.data.line(k / m, k % m);
    const double s0 = line_threshold(field, line.x.norm(), threshold_flavor, spec.scatter);
    std::vector<double> ladder;
    for (double f : spec.ladder_factors) ladder.push_back(f * s0);
    const SweepResult sw = high_energy_sweep(field, line, ladder, spec.flavor, spec.scatter, opts);
    LineData out;
    out.s_max = *std::max_element(ladder.begin(), ladder.end());
    if (force) {
      out.data = sw.a_limit;
      if (spec.flavor != Flavor::kModified) out.data -= xray_force(field, FieldPart::kLong, line);
      out.exact = xray_force(field, FieldPart::kShort, line);
    } else {
      out.data = Eigen::VectorXd::Constant(1, -sw.b_limit);
      out.exact = Eigen::VectorXd::Constant(1, xray_potential(field, FieldPart::kShort, line));
    }
    return out;
  });
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k / m), j = static_cast<Eigen::Index>(k % m);
    for (int c = 0; c < comps; ++c) {
      res.data.values[static_cast<std::size_t>(c)](i, j) = lines[k].data(c);
      res.exact.values[static_cast<std::size_t>(c)](i, j) = lines[k].exact(c);
    }
    res.s_max = std::max(res.s_max, lines[k].s_max);
  }

  res.reconstruction = invert_fbp_2d(res.data, spec.grid);
  res.warnings = res.reconstruction.warnings;
  const FbpResult floor = invert_fbp_2d(res.exact, spec.grid);
  if (force) {
    res.truth = sample_on_grid([&](const Vec& y) { return field.short_force(y); }, 2, spec.grid);
  } else {
    res.truth = sample_on_grid(
        [&](const Vec& y) {
          Vec v(1);
          v(0) = field.short_potential(y);
          return v;
        },
        1, spec.grid);
  }
  res.field_error = relative_l2(res.reconstruction.values, res.truth);
  res.inversion_floor = relative_l2(floor.values, res.truth);
  res.sinogram_error = relative_l2(res.data.values, res.exact.values);
  double num = 0.0, den = 0.0;
  for (std::size_t c = 0; c < res.truth.size(); ++c) {
    num += (res.reconstruction.values[c] - floor.values[c]).squaredNorm();
    den += res.truth[c].squaredNorm();
  }
  res.data_error = std::sqrt(num / (den > 0.0 ? den : 1.0));
  return res;
}

}  // namespace newtonscat
