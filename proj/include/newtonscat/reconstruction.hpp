#pragma once

#include <string>
#include <vector>

#include "newtonscat/high_energy.hpp"
#include "newtonscat/xray.hpp"

namespace newtonscat {

enum class ReconTarget { kForceFromA, kPotentialFromB };

const char* to_string(ReconTarget target);
ReconTarget recon_target_from_string(const std::string& name);

struct ReconstructionSpec {
  /// Speeds on each line are these multiples of the line's threshold.
  std::vector<double> ladder_factors{2.0, 4.0};
  int extrapolation_order = 1;
  int angle_count = 90;
  int offset_count = 129;
  double offset_max = 3.2;
  ReconGrid grid{128, 2.25};
  ReconTarget target = ReconTarget::kForceFromA;
  Flavor flavor = Flavor::kStandard;
  int jobs = 1;
  ScatterConfig scatter;
};

struct ReconstructionResult {
  /// F^s components (force target) or V^s (potential target) on the grid.
  FbpResult reconstruction;
  std::vector<Eigen::MatrixXd> truth;
  /// Line integrals recovered from scattering data, and computed directly.
  Sinogram data;
  Sinogram exact;
  /// Relative L2 errors: reconstruction vs truth, data vs exact sinogram,
  /// FBP of the exact sinogram vs truth, and reconstruction vs that FBP
  /// (the part due to the scattering data), relative to |truth|.
  double field_error = 0.0;
  double sinogram_error = 0.0;
  double inversion_floor = 0.0;
  double data_error = 0.0;
  double s_max = 0.0;
  std::vector<std::string> warnings;
};

/// Recovers the short-range force (from a_sc) or potential (from b_sc) on a
/// planar grid: per-line high-energy limits, minus PF^l for the standard
/// force target, then filtered back-projection. Only n = 2.
ReconstructionResult reconstruct_short_range(const ForceField& field, const ReconstructionSpec& spec);

}  // namespace newtonscat
