#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "newtonscat/vector.hpp"

namespace newtonscat {

/// Decay constants of a split potential.
///
/// The long-range part obeys |d^j V^l(x)| <= beta_long[|j|] (1+|x|)^-(alpha+|j|)
/// and the short-range part |d^j V^s(x)| <= beta_short[|j|] (1+|x|)^-(alpha+1+|j|)
/// for every multi-index with |j| <= 2. Note the short-range constants are
/// indexed by derivative order, so beta_short[1] is the constant written
/// with subscript 2 in the usual notation.
struct DecayProfile {
  int dim = 2;
  double alpha = 1.0;
  std::array<double, 3> beta_long{0.0, 0.0, 0.0};
  std::array<double, 3> beta_short{0.0, 0.0, 0.0};

  /// Throws DomainError unless 0 < alpha <= 1, all constants >= 0, dim >= 2.
  void validate() const;

  double beta1_long() const { return beta_long[1]; }
  double beta2_long() const { return beta_long[2]; }
  double beta2_short() const { return beta_short[1]; }
  double beta3_short() const { return beta_short[2]; }
  /// max of the second-derivative constants of both parts.
  double beta2() const;
  /// max(beta1_long, beta2_long, beta2_short, beta3_short); the single
  /// constant that enters the high-energy thresholds and bounds.
  double beta_max() const;
};

enum class TermFamily { kPower, kGaussian };

/// One analytic term of a potential.
///
/// kPower:    strength * (core^2 + |D(x - center)|^2)^(-exponent/2)
/// kGaussian: strength * exp(-|D(x - center)|^2)
/// where D = diag(1/scales). For the Gaussian the scales are the widths.
struct PotentialTerm {
  TermFamily family = TermFamily::kPower;
  double strength = 0.0;
  double exponent = 1.0;
  double core = 1.0;
  Vec center;
  Vec scales;

  static PotentialTerm power(int dim, double strength, double exponent, double core = 1.0);
  static PotentialTerm gaussian(int dim, double strength, double width);

  double value(const Vec& x) const;
  /// Adds strength-scaled derivatives of this term into the outputs.
  void accumulate(const Vec& x, double& v, Vec* gradient, Mat* hessian) const;
};

/// Sum of analytic terms. An empty sum is the zero potential.
class Potential {
 public:
  Potential() = default;
  explicit Potential(std::vector<PotentialTerm> terms) : terms_(std::move(terms)) {}

  bool is_zero() const { return terms_.empty(); }
  const std::vector<PotentialTerm>& terms() const { return terms_; }

  double value(const Vec& x) const;
  /// -grad V
  Vec force(const Vec& x) const;
  /// -Hess V, the Jacobian of the force.
  Mat force_jacobian(const Vec& x) const;
  /// Value, gradient and Hessian in one pass.
  void derivatives(const Vec& x, double& v, Vec& gradient, Mat& hessian) const;

 private:
  std::vector<PotentialTerm> terms_;
};

/// A force field F = F^l + F^s with both parts conservative, together with
/// the decay constants the field author declares for it.
class ForceField {
 public:
  ForceField() = default;
  ForceField(std::string name, Potential long_part, Potential short_part, DecayProfile profile);

  const std::string& name() const { return name_; }
  int dim() const { return profile_.dim; }
  const DecayProfile& profile() const { return profile_; }
  const Potential& long_part() const { return long_; }
  const Potential& short_part() const { return short_; }

  double long_potential(const Vec& x) const { return long_.value(x); }
  double short_potential(const Vec& x) const { return short_.value(x); }
  double potential(const Vec& x) const { return long_.value(x) + short_.value(x); }

  Vec long_force(const Vec& x) const { return long_.force(x); }
  Vec short_force(const Vec& x) const { return short_.force(x); }
  Vec force(const Vec& x) const { return long_.force(x) + short_.force(x); }

  /// Total energy 1/2 |xdot|^2 + V(x), conserved along solutions.
  double energy(const Vec& x, const Vec& xdot) const;

  /// Same field with every strength multiplied by `factor` and the declared
  /// constants scaled accordingly.
  ForceField scaled(double factor) const;
  /// Same field with the short-range part removed.
  ForceField long_range_only() const;

 private:
  std::string name_;
  Potential long_;
  Potential short_;
  DecayProfile profile_;
};

/// (F^l(x), F^s(x)). Throws DomainError for non-finite or wrong-sized input.
std::pair<Vec, Vec> eval_split_force(const ForceField& field, const Vec& x);

struct DecayReport {
  /// sup over samples of |d^j V| (1+|x|)^(decay exponent) / beta, per order.
  std::array<double, 3> long_ratio{0.0, 0.0, 0.0};
  std::array<double, 3> short_ratio{0.0, 0.0, 0.0};
  std::size_t samples = 0;
  bool pass = true;
};

/// Samples the declared decay inequalities on log-spaced radii up to
/// radius_max with uniformly distributed directions. Every partial
/// derivative (not just the gradient norm) is checked.
DecayReport verify_decay(const ForceField& field, std::size_t sample_count, double radius_max,
                         std::uint64_t seed = 20240611);

/// Speed above which the long-range free flows through the origin exist:
/// sqrt(32 n max(beta1_long, beta2_long) / alpha).
double mu_threshold(const DecayProfile& profile);

/// Same threshold for free flows through a point at distance sigma from the
/// origin: sqrt(32 n max(beta1_long, beta2_long) / (alpha (1 + sigma/sqrt2)^alpha)).
double mu_of_sigma(const DecayProfile& profile, double sigma);

/// Maximum relative error between the analytic force and central finite
/// differences of the potential over `count` random points in the ball of
/// radius `radius`. Step 1e-5 (1+|x|).
double gradient_consistency_error(const ForceField& field, std::size_t count, double radius,
                                  std::uint64_t seed = 7);

/// Names accepted by builtin_field().
std::vector<std::string> builtin_field_names();

/// Builtin fields with sampled-and-verified decay constants:
///   zero            V = 0
///   demo            0.05 (1+|x|^2)^-1/2  +  0.02 exp(-|x-(0.3,-0.2)|^2/0.7^2)
///   demo_weak       demo with all strengths divided by 4
///   long_only       long-range part of demo
///   short_only      short-range part of demo
///   short_power     0.05 (1+|x|^2)^-1
///   coulomb_like    0.05 (0.5^2+|x|^2)^-1/2 + Gaussian bump
///   anisotropic     power tail plus an elongated Gaussian, alpha = 1
///   fractional      alpha = 3/4 power tail plus Gaussian bump
///   fractional_weak fractional with strengths divided by 4
///   well            attractive Gaussian well -2 exp(-|x|^2), no tail
ForceField builtin_field(const std::string& name);

/// Parses a field definition:
///   {"builtin": "demo"}  or
///   {"dimension": 2, "alpha": 1, "long_range": [terms], "short_range": [terms],
///    "profile": {"beta_long": [b0,b1,b2], "beta_short": [b1,b2,b3]}}
/// with terms {"family": "power"|"gaussian", "strength", "exponent", "core",
/// "center", "scales"|"width"}. Unknown keys are rejected with ConfigError.
ForceField field_from_json(const nlohmann::json& spec);

}  // namespace newtonscat
