#include <cmath>

#include <gtest/gtest.h>

#include "newtonscat/errors.hpp"
#include "newtonscat/high_energy.hpp"
#include "test_support.hpp"

using namespace newtonscat;

TEST(Extrapolation, ExactOnPolynomialsInInverseSquare) {
  const std::vector<double> s{10.0, 20.0, 40.0};
  std::vector<double> v;
  for (double x : s) v.push_back(3.0 - 5.0 / (x * x) + 7.0 / std::pow(x, 4));
  EXPECT_NEAR(extrapolate_to_infinity(s, v, 2), 3.0, 1e-13);
  EXPECT_GT(std::abs(extrapolate_to_infinity(s, v, 1) - 3.0), 1e-8);
  EXPECT_DOUBLE_EQ(extrapolate_to_infinity(s, v, 0), v.back());
}

TEST(Extrapolation, OrderIsCappedAndOrderIndependent) {
  const std::vector<double> s{40.0, 10.0};
  const std::vector<double> v{2.0 + 1.0 / 1600.0, 2.0 + 1.0 / 100.0};
  EXPECT_NEAR(extrapolate_to_infinity(s, v, 5), 2.0, 1e-14);
  EXPECT_THROW(extrapolate_to_infinity(s, std::vector<double>{1.0}, 1), DomainError);
}

TEST(Extrapolation, SlopeAndLadder) {
  const auto s = geometric_ladder(100.0, 2.0, 4);
  ASSERT_EQ(s.size(), 4u);
  EXPECT_DOUBLE_EQ(s[3], 800.0);
  std::vector<double> v;
  for (double x : s) v.push_back(4.0 / (x * x));
  EXPECT_NEAR(loglog_slope(s, v), -2.0, 1e-12);
  EXPECT_THROW(geometric_ladder(1.0, 1.0, 3), DomainError);
}

TEST(Thresholds, ZeroFieldHasNoThreshold) {
  EXPECT_EQ(line_threshold(builtin_field("zero"), 1.0, Flavor::kStandard), 0.0);
  const ForceField f = builtin_field("demo");
  EXPECT_GT(line_threshold(f, 1.0, Flavor::kStandard), line_threshold(f, 0.0, Flavor::kStandard));
}

TEST(TheoremBounds, HoldAboveThresholdForBothFlavors) {
  const ForceField f = builtin_field("demo");
  for (Flavor fl : {Flavor::kStandard, Flavor::kModified})
    for (double factor : {2.0, 4.0}) {
      const LineParam l = LineParam::planar(0.4, 0.5);
      const double s = factor * line_threshold(f, 0.5, fl);
      const TheoremReport r = verify_theorem_bounds(f, l, s, fl);
      EXPECT_TRUE(r.pass) << to_string(fl) << " factor " << factor;
      EXPECT_EQ(r.checks.size(), 2u);
    }
}

TEST(TheoremBounds, BelowThresholdNamesTheCondition) {
  const ForceField f = builtin_field("demo");
  const LineParam l = LineParam::planar(0.0, 0.5);
  try {
    verify_theorem_bounds(f, l, 0.5 * line_threshold(f, 0.5, Flavor::kStandard), Flavor::kStandard);
    FAIL() << "expected InfeasibleError";
  } catch (const InfeasibleError& e) {
    EXPECT_EQ(e.condition(), "threshold s0");
  }
  EXPECT_THROW(verify_theorem_bounds(f, l, 1e5, Flavor::kIterateN), UsageError);
}

// Scaled data approach the X-ray transforms; the gap shrinks at least like
// the bound allows.
TEST(Sweep, LimitsMatchXrayTransforms) {
  const ForceField f = builtin_field("demo");
  for (Flavor fl : {Flavor::kStandard, Flavor::kModified, Flavor::kIterateN}) {
    const LineParam l = LineParam::planar(2.2, -0.35);
    const Flavor tf = fl == Flavor::kModified ? Flavor::kModified : Flavor::kStandard;
    const double s0 = line_threshold(f, 0.35, tf);
    const SweepResult r = high_energy_sweep(f, l, {2 * s0, 4 * s0, 8 * s0}, fl);
    EXPECT_LE(r.a_rel_error, 1e-3) << to_string(fl);
    EXPECT_LE(r.b_rel_error, 1e-3) << to_string(fl);
    EXPECT_LE(r.a_slope, -0.7) << to_string(fl);
    EXPECT_LE(r.b_slope, -0.7) << to_string(fl);
  }
}

TEST(Sweep, ParallelMatchesSerial) {
  const ForceField f = builtin_field("demo");
  const LineParam l = LineParam::planar(0.9, 0.2);
  const double s0 = line_threshold(f, 0.2, Flavor::kStandard);
  SweepOptions serial, threaded;
  threaded.jobs = 3;
  const SweepResult a = high_energy_sweep(f, l, {2 * s0, 3 * s0, 4 * s0}, Flavor::kStandard, {}, serial);
  const SweepResult b = high_energy_sweep(f, l, {2 * s0, 3 * s0, 4 * s0}, Flavor::kStandard, {}, threaded);
  EXPECT_EQ((a.a_limit - b.a_limit).norm(), 0.0);
  EXPECT_EQ(a.b_limit, b.b_limit);
}

TEST(Sweep, RejectsOracleAndEmptyLadder) {
  const ForceField f = builtin_field("demo");
  const LineParam l = LineParam::planar(0.0, 0.0);
  EXPECT_THROW(high_energy_sweep(f, l, {}, Flavor::kStandard), DomainError);
  EXPECT_THROW(high_energy_sweep(f, l, {1e4}, Flavor::kOracle), UsageError);
}
