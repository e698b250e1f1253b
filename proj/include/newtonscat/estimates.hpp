#pragma once

#include "newtonscat/potentials.hpp"

namespace newtonscat {

/// Closed-form constants of the incoming contraction maps for data
/// (|x_-|, |v_-|) and ball radius r. Infinite when a formula leaves its
/// domain (e.g. r >= 1 or r >= |v_-|/2^(3/2)).
struct BoundConstants {
  double r = 0.0;
  double rho = 0.0;        // self-map bound, standard flavor
  double lambda = 0.0;     // contraction constant, all flavors
  double rho_tilde = 0.0;  // self-map bound, modified flavor
  /// Left side of the smallness condition for the breakdown terms
  /// 8 n max(b1l, b2) / (alpha k^2 (1-r)^(alpha+1)) <= 1.
  double breakdown_lhs = 0.0;
  /// Left side of the smallness condition for the modified map
  /// 20 n max(b1l, b2) / (alpha k^2 (1/2 + |x|/2^(3/2) - r)^alpha) <= 1.
  double modified_lhs = 0.0;
};

/// Throws DomainError unless 0 < r < max(|v|/2^(3/2), 1 + |x|/sqrt2).
BoundConstants bound_constants(const DecayProfile& profile, double x_norm, double v_norm, double r);

/// Default ball radius: 1/2 for the standard flavors, half the admissible
/// interval 1/2 + |x|/2^(3/2) for the modified one.
double default_radius(double x_norm, bool modified);

/// Node-wise and scalar estimates. x, v are |x_-|, |v_-|; k = |v|/2^(3/2) - r.
namespace bounds {

// Incoming remainder, standard flavor, t <= 0.
double incoming_rate(const DecayProfile& p, double x, double v, double r, double t);
double incoming_deviation(const DecayProfile& p, double x, double v, double r, double t);
// Scattering data and breakdown terms, standard flavor.
double a_sc(const DecayProfile& p, double x, double v, double r);
double l_term(const DecayProfile& p, double x, double v, double r);
double a_sc_born(const DecayProfile& p, double x, double v, double r);
double l_term_born(const DecayProfile& p, double x, double v, double r);
double l1_term(const DecayProfile& p, double x, double v);
double l2_term(const DecayProfile& p, double x, double v, double r);
double outgoing_remainder(const DecayProfile& p, double x, double v, double r, double t);

// Modified flavor.
double modified_rate(const DecayProfile& p, double x, double v, double r, double t);
double modified_deviation(const DecayProfile& p, double x, double v, double r, double t);
double modified_a_sc(const DecayProfile& p, double x, double v, double r);
double modified_b_sc(const DecayProfile& p, double x, double v, double r);
double modified_remainder(const DecayProfile& p, double x, double v, double r, double t);
double modified_a_born(const DecayProfile& p, double x, double v, double r);
double modified_b_born(const DecayProfile& p, double x, double v, double r);
/// Bound on |G(h)| and the ball it maps into.
double g_map(const DecayProfile& p, double x, double v, double r);
double g_ball(double x);
/// Lipschitz constant of G.
double g_lipschitz(const DecayProfile& p, double x, double v);

// High-energy bounds along (theta, x) at speed s.
double born_a(const DecayProfile& p, double x, double s, double r);
double born_b(const DecayProfile& p, double x, double s, double r);
double modified_born_a(const DecayProfile& p, double x, double s, double r);
double modified_born_b(const DecayProfile& p, double x, double s, double r);

}  // namespace bounds

enum class ThresholdVariant { kStandard, kModified };

/// Right side of the threshold equation at speed s; the threshold is where
/// it equals 1. Above the threshold it bounds max(rho/r, lambda, smallness).
double threshold_function(ThresholdVariant variant, double s, double sigma, double r, double beta,
                          double alpha, int n);

/// Root of threshold_function = 1 by bisection (|residual| <= 1e-10).
/// Throws DomainError for r outside the variant's interval or beta <= 0,
/// NumericError when no bracket is found.
double s_threshold(double sigma, double r, double beta, double alpha, ThresholdVariant variant, int n);

/// Same root by the secant method, for cross-checking.
double s_threshold_secant(double sigma, double r, double beta, double alpha,
                          ThresholdVariant variant, int n);

/// Threshold for a profile: beta = max(b1l, b2l, b2s, b3s).
double s_threshold(const DecayProfile& profile, double sigma, double r, ThresholdVariant variant);

}  // namespace newtonscat
