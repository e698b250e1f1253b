#include "newtonscat/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "newtonscat/errors.hpp"

namespace newtonscat {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double k2p32 = 2.8284271247461903;  // 2^(3/2)
constexpr double kInf = std::numeric_limits<double>::infinity();

// Clamped at zero so every bound becomes infinite outside its domain.
double gap(double v, double r) { return std::max(v / k2p32 - r, 0.0); }

// Positive-base power, infinite when the base is not positive.
double ppow(double base, double e) { return base > 0.0 ? std::pow(base, e) : 0.0; }

double safe_div(double num, double den) { return den > 0.0 ? num / den : kInf; }

double max_b1l_b2(const DecayProfile& p) { return std::max(p.beta1_long(), p.beta2()); }
double max_b2_b3s(const DecayProfile& p) { return std::max(p.beta2(), p.beta3_short()); }

}  // namespace

double default_radius(double x_norm, bool modified) {
  if (modified) return std::min(0.5, 0.5 * (0.5 + x_norm / k2p32));
  return std::min(0.5, 0.5 * (1.0 + x_norm / kSqrt2));
}

BoundConstants bound_constants(const DecayProfile& prof, double x, double v, double r) {
  prof.validate();
  if (!(r > 0.0) || !(r < std::max(v / k2p32, 1.0 + x / kSqrt2)))
    throw DomainError("r must satisfy 0 < r < max(|v|/2^(3/2), 1 + |x|/sqrt2)");
  const double n = prof.dim, a = prof.alpha, b2 = prof.beta2(), b3 = prof.beta3_short();
  const double k = gap(v, r);
  const double m = 1.0 - r + x / kSqrt2;
  BoundConstants c;
  c.r = r;
  c.rho = safe_div(b2 * (n * (3 * x + 2 * r) + 2 * std::sqrt(n)), k * ppow(1 - r, a)) *
          (safe_div(2.0, a * k) + safe_div(1.0, (a + 1) * (1 - r)));
  c.lambda = safe_div(2 * n, a * k * ppow(m, a)) * (b2 + safe_div(b3, m) + safe_div(b3, k)) *
             (safe_div(1.0, m) + safe_div(1.0, k));
  c.rho_tilde = safe_div(2 * b2 * std::sqrt(n) * (std::sqrt(n) * r + 1), k * ppow(m, a)) *
                (safe_div(1.0, (a + 1) * m) + safe_div(2.0, a * k));
  c.breakdown_lhs = safe_div(8 * n * max_b1l_b2(prof), a * k * k * ppow(1 - r, a + 1));
  c.modified_lhs = safe_div(20 * n * max_b1l_b2(prof), a * k * k * ppow(0.5 + x / k2p32 - r, a));
  if (!(k > 0.0)) c.rho = c.lambda = c.rho_tilde = c.breakdown_lhs = c.modified_lhs = kInf;
  return c;
}

namespace bounds {

double incoming_rate(const DecayProfile& p, double x, double v, double r, double t) {
  const double n = p.dim, a = p.alpha, k = gap(v, r);
  return safe_div(p.beta2() * (n * (x + r) + std::sqrt(n)),
                  (a + 1) * k * ppow(1 - r + std::abs(t) * k, a + 1));
}

double incoming_deviation(const DecayProfile& p, double x, double v, double r, double t) {
  const double n = p.dim, a = p.alpha, k = gap(v, r);
  return safe_div(p.beta2() * (n * (x + r) + std::sqrt(n)),
                  a * (a + 1) * k * k * ppow(1 - r + std::abs(t) * k, a));
}

double a_sc(const DecayProfile& p, double x, double v, double r) {
  const double n = p.dim, a = p.alpha, k = gap(v, r);
  const double m = 1 + x / kSqrt2 - r;
  return safe_div(2 * std::sqrt(n), k * ppow(m, a)) *
         (p.beta1_long() / a + safe_div(p.beta2(), (a + 1) * m));
}

double l_term(const DecayProfile& p, double x, double v, double r) {
  const double n = p.dim, a = p.alpha, k = gap(v, r);
  return safe_div(p.beta2() * std::sqrt(n) * (std::sqrt(n) * (x + r) + 2),
                  a * (a + 1) * ppow(1 - r, a) * k * k);
}

double a_sc_born(const DecayProfile& p, double x, double v, double r) {
  const double n = p.dim, a = p.alpha, k = gap(v, r), b = max_b2_b3s(p);
  return safe_div(4 * b * b * std::pow(n, 1.5) * (std::sqrt(n) * (3 * x + 2 * r) + 2),
                  a * a * k * k * ppow(1 - r, 2 * a + 3)) *
         std::pow(1.0 / k + 1.0, 2);
}

double l_term_born(const DecayProfile& p, double x, double v, double r) {
  const double n = p.dim, a = p.alpha, k = gap(v, r), b = max_b2_b3s(p);
  return safe_div(4 * b * b * std::pow(n, 1.5) * (std::sqrt(n) * (3 * x + 2 * r) + 2),
                  a * a * (a + 1) * k * k * k * ppow(1 - r, 2 * a + 2)) *
         std::pow(1.0 / k + 1.0, 2);
}

double l1_term(const DecayProfile& p, double x, double v) {
  const double n = p.dim, a = p.alpha;
  return safe_div(8 * p.beta2() * n * x, a * (a + 1) * v * v);
}

double l2_term(const DecayProfile& p, double x, double v, double r) {
  const double n = p.dim, a = p.alpha, k = gap(v, r), b2 = p.beta2();
  return safe_div(2 * std::pow(n, 1.5) * b2 * b2 * (std::sqrt(n) * (2 * x + r) + 3),
                  a * a * (a + 1) * (a + 1) * ppow(1 - r, 2 * a) * std::pow(k, 4));
}

double outgoing_remainder(const DecayProfile& p, double x, double v, double r, double t) {
  const double n = p.dim, a = p.alpha, k = gap(v, r), b2 = p.beta2();
  const double lead = safe_div(2 * std::sqrt(n) * b2,
                               a * (a + 1) * k * k * ppow(1 - r + x / kSqrt2 + t * k, a));
  const double corr = safe_div(2 * n * b2 * (std::sqrt(n) * (2 * x + r) + 3),
                               a * (a + 1) * k * k * ppow(1 - r, a));
  return lead * (1.0 + corr);
}

double modified_rate(const DecayProfile& p, double x, double v, double r, double t) {
  const double n = p.dim, a = p.alpha, k = gap(v, r);
  return safe_div(p.beta2() * (n * r + std::sqrt(n)),
                  (a + 1) * k * ppow(1 + x / kSqrt2 - r + std::abs(t) * k, a + 1));
}

double modified_deviation(const DecayProfile& p, double x, double v, double r, double t) {
  const double n = p.dim, a = p.alpha, k = gap(v, r);
  return safe_div(p.beta2() * (n * r + std::sqrt(n)),
                  a * (a + 1) * k * k * ppow(1 + x / kSqrt2 - r + std::abs(t) * k, a));
}

double modified_a_sc(const DecayProfile& p, double x, double v, double r) {
  const double n = p.dim, a = p.alpha, k = gap(v, r);
  return safe_div(6 * std::sqrt(n) * max_b1l_b2(p), a * k * ppow(1 + x / kSqrt2 - r, a));
}

double modified_b_sc(const DecayProfile& p, double x, double v, double r) {
  const double n = p.dim, a = p.alpha, k = gap(v, r);
  return safe_div(4 * p.beta2() * (n * r + std::sqrt(n)),
                  a * (a + 1) * k * k * ppow(0.5 + x / (2 * kSqrt2) - r, a));
}

double modified_remainder(const DecayProfile& p, double x, double v, double r, double t) {
  const double n = p.dim, a = p.alpha, k = gap(v, r);
  return safe_div(2 * p.beta2() * std::sqrt(n),
                  a * (a + 1) * k * k * ppow(0.5 + x / (2 * kSqrt2) - r + t * k, a));
}

double modified_a_born(const DecayProfile& p, double x, double v, double r) {
  const double n = p.dim, a = p.alpha, k = gap(v, r), b = max_b2_b3s(p);
  return safe_div(4 * b * b * n * (n * r + std::sqrt(n)),
                  a * (a + 1) * k * k * ppow(1 - r + x / kSqrt2, 2 * a + 1)) *
         std::pow(3.0 + 2.0 / k, 2);
}

double modified_b_born(const DecayProfile& p, double x, double v, double r) {
  const double n = p.dim, a = p.alpha, k = gap(v, r), b = max_b2_b3s(p);
  return safe_div(10 * n * (n * r + std::sqrt(n)) * b * b * std::pow(3.0 + 1.0 / k, 2),
                  a * a * (a + 1) * k * k * k * ppow(1 + x / kSqrt2 - r, 2 * a));
}

double g_map(const DecayProfile& p, double x, double v, double r) {
  const double n = p.dim, a = p.alpha, k = gap(v, r);
  return safe_div(p.beta2() * (6 * (n * r + std::sqrt(n)) + n * (1 + x / kSqrt2)),
                  2 * a * (a + 1) * k * k * ppow(0.5 + x / (2 * kSqrt2) - r, a));
}

double g_ball(double x) { return 0.25 + x / std::pow(2.0, 2.5); }

double g_lipschitz(const DecayProfile& p, double x, double v) {
  const double n = p.dim, a = p.alpha;
  return safe_div(16 * n * p.beta2_long(), a * (a + 1) * v * v * ppow(0.5 + x / (2 * kSqrt2), a));
}

double born_a(const DecayProfile& p, double x, double s, double r) {
  const double n = p.dim, a = p.alpha, k = gap(s, r), b = p.beta_max();
  return safe_div(4 * n * n * (3 * x + 5) * b * b * std::pow(1 + 1 / k, 2),
                  a * a * ppow(1 - r, 2 * a + 3) * k * k);
}

double born_b(const DecayProfile& p, double x, double s, double r) {
  const double n = p.dim, a = p.alpha, k = gap(s, r), b = p.beta_max();
  return safe_div(4 * n * n * (3 * x + 5) * b * b * std::pow(1 + 1 / k, 2),
                  a * a * ppow(1 - r, 2 * a + 2) * k * k * k);
}

double modified_born_a(const DecayProfile& p, double x, double s, double r) {
  const double n = p.dim, a = p.alpha, k = gap(s, r), b = p.beta_max();
  return safe_div(12 * n * n * b * b * std::pow(3 + 2 / k, 2),
                  a * (a + 1) * k * k * ppow(1 - r + x / kSqrt2, 2 * a + 1));
}

double modified_born_b(const DecayProfile& p, double x, double s, double r) {
  const double n = p.dim, a = p.alpha, k = gap(s, r), b = p.beta_max();
  return safe_div(24 * n * n * b * b * std::pow(3 + 1 / k, 2),
                  a * a * (a + 1) * k * k * k * ppow(1 - r + x / kSqrt2, 2 * a));
}

}  // namespace bounds

double threshold_function(ThresholdVariant variant, double s, double sigma, double r, double beta,
                          double alpha, int n) {
  const double k = gap(s, r);
  if (k <= 0.0) return kInf;
  const double tail = std::pow(1.0 + 1.0 / k, 2);
  if (variant == ThresholdVariant::kStandard)
    return 4 * beta * n * (sigma + 1) / (alpha * r * k * std::pow(1 - r, alpha + 2)) * tail;
  return 12 * beta * n / (alpha * r * k * std::pow(0.5 - r + sigma / k2p32, alpha)) * tail;
}

namespace {

void check_threshold_args(double sigma, double r, double beta, double alpha,
                          ThresholdVariant variant, int n) {
  if (!(beta > 0.0)) throw DomainError("threshold needs beta > 0");
  if (!(alpha > 0.0) || alpha > 1.0) throw DomainError("alpha must lie in (0, 1]");
  if (!(sigma >= 0.0) || n < 1) throw DomainError("invalid threshold arguments");
  const double upper = variant == ThresholdVariant::kStandard ? 1.0 : 0.5 + sigma / k2p32;
  if (!(r > 0.0) || !(r < upper)) throw DomainError("r outside the threshold interval");
}

// Finite upper bracket where the threshold function is below 1.
double upper_bracket(ThresholdVariant variant, double sigma, double r, double beta, double alpha,
                     int n) {
  double hi = k2p32 * r + 1.0;
  for (int i = 0; i < 400; ++i) {
    if (threshold_function(variant, hi, sigma, r, beta, alpha, n) < 1.0) return hi;
    hi *= 2.0;
  }
  throw NumericError("no bracketing interval for the threshold root");
}

}  // namespace

double s_threshold(double sigma, double r, double beta, double alpha, ThresholdVariant variant, int n) {
  check_threshold_args(sigma, r, beta, alpha, variant, n);
  double lo = k2p32 * r;
  double hi = upper_bracket(variant, sigma, r, beta, alpha, n);
  for (int i = 0; i < 400; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (threshold_function(variant, mid, sigma, r, beta, alpha, n) > 1.0)
      lo = mid;
    else
      hi = mid;
  }
  const double res = std::abs(threshold_function(variant, hi, sigma, r, beta, alpha, n) - 1.0);
  if (res > 1e-10) throw NumericError("threshold bisection residual above 1e-10");
  return hi;
}

double s_threshold_secant(double sigma, double r, double beta, double alpha,
                          ThresholdVariant variant, int n) {
  check_threshold_args(sigma, r, beta, alpha, variant, n);
  const double floor = k2p32 * r;
  // The function behaves like C/k for large k, so iterate on log(phi) in log(k).
  auto g = [&](double lk) {
    return std::log(threshold_function(variant, floor + std::exp(lk), sigma, r, beta, alpha, n));
  };
  double x0 = std::log(upper_bracket(variant, sigma, r, beta, alpha, n) - floor);
  double x1 = x0 - 1.0;
  double g0 = g(x0), g1 = g(x1);
  for (int i = 0; i < 200; ++i) {
    if (g1 == g0) break;
    const double x2 = x1 - g1 * (x1 - x0) / (g1 - g0);
    x0 = x1;
    g0 = g1;
    x1 = x2;
    g1 = g(x1);
    if (std::abs(x1 - x0) < 1e-15 * (1.0 + std::abs(x1))) break;
  }
  if (!std::isfinite(x1) || std::abs(std::expm1(g1)) > 1e-10)
    throw NumericError("threshold secant iteration failed");
  return floor + std::exp(x1);
}

double s_threshold(const DecayProfile& profile, double sigma, double r, ThresholdVariant variant) {
  return s_threshold(sigma, r, profile.beta_max(), profile.alpha, variant, profile.dim);
}

}  // namespace newtonscat
