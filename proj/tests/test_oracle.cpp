#include <cmath>

#include <gtest/gtest.h>

#include "newtonscat/errors.hpp"
#include "newtonscat/oracle.hpp"
#include "test_support.hpp"

using namespace newtonscat;

TEST(Oracle, FreeMotionIsStraight) {
  const ForceField f = builtin_field("zero");
  const Vec x0 = make_vec({0.0, 1.0}), v0 = make_vec({2.0, 0.0});
  const Trajectory tr = integrate_newton(f, x0, v0, uniform_times(0.0, 100.0, 401));
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    EXPECT_LE((Vec(tr.positions.col(c)) - (x0 + tr.times[i] * v0)).norm(), 1e-12 * (1.0 + tr.times[i]));
  }
  const CaptureReport cap = detect_capture(tr);
  EXPECT_TRUE(cap.scattering);
  EXPECT_NEAR(cap.epsilon, v0.norm() / 2.0, 0.05 * v0.norm());
}

TEST(Oracle, LowEnergyOrbitInWellIsCaptured) {
  const ForceField f = builtin_field("well");
  const Vec x0 = make_vec({0.5, 0.0}), v0 = make_vec({0.0, 0.6});
  ASSERT_LT(f.energy(x0, v0), 0.0);
  const Trajectory tr = integrate_newton(f, x0, v0, uniform_times(0.0, 200.0, 2001));
  EXPECT_FALSE(detect_capture(tr).scattering);
}

TEST(Oracle, HighEnergyPassOverWellScatters) {
  const ForceField f = builtin_field("well");
  const OracleResult r = oracle_scattering(f, make_vec({20.0, 0.0}), make_vec({0.0, 0.4}));
  EXPECT_FALSE(r.captured);
  EXPECT_TRUE(r.capture.scattering);
  EXPECT_EQ(r.datum.flavor, Flavor::kOracle);
  EXPECT_LE((r.datum.a_sc - (r.datum.a - r.datum.v_minus)).norm(), 1e-15 * r.datum.a.norm());
}

TEST(Oracle, TimeTranslationInvariance) {
  const ForceField f = builtin_field("demo");
  const Vec x0 = make_vec({-3.0, 0.4}), v0 = make_vec({5.0, 0.2});
  const Trajectory a = integrate_newton(f, x0, v0, uniform_times(0.0, 2.0, 41));
  const Trajectory b = integrate_newton(f, x0, v0, uniform_times(7.0, 9.0, 41));
  EXPECT_LE((a.positions - b.positions).norm(), 1e-11);
  EXPECT_LE((a.velocities - b.velocities).norm(), 1e-11);
}

TEST(Oracle, EnergyDriftWithinTolerance) {
  const ForceField f = builtin_field("demo");
  const Vec v = make_vec({1607.0, 0.0}), x = make_vec({0.0, 1.0});
  const OracleResult r = oracle_scattering(f, v, x);
  const double e = 0.5 * v.squaredNorm();
  EXPECT_LE(r.energy_drift, 1e3 * OracleConfig{}.rel_tol * e);
}

TEST(Oracle, AgreesWithFixedPointSolver) {
  const ForceField f = builtin_field("demo");
  gen::Rng rng(31);
  for (int k = 0; k < 3; ++k) {
    const auto in = gen::admissible_input(f, rng, 2.0, 1.0);
    const OracleResult o = oracle_scattering(f, in.v, in.x);
    const ScatteringDatum s = scatter(f, in.v, in.x, Flavor::kStandard);
    ASSERT_FALSE(o.captured);
    EXPECT_LE((o.datum.a - s.a).norm() / s.a.norm(), 1e-5);
    EXPECT_LE((o.datum.b - s.b).norm() / s.b.norm(), 1e-5);
    EXPECT_LE((o.datum.a_sc - s.a_sc).norm(), 1e-6 * s.a_sc.norm());
  }
}

TEST(Oracle, LaunchTimeRobustness) {
  const ForceField f = builtin_field("demo");
  const Vec v = make_vec({1607.0, 0.0}), x = make_vec({0.0, 0.5});
  OracleConfig near, far;
  far.t_launch = 2.0 * near.t_launch;
  const OracleResult a = oracle_scattering(f, v, x, near), b = oracle_scattering(f, v, x, far);
  EXPECT_LE((a.datum.a - b.datum.a).norm(), 1e-9 * a.datum.a_sc.norm() + 1e-12);
  EXPECT_LE((a.datum.b - b.datum.b).norm(), 1e-9);
}

TEST(Oracle, RejectsTooSlowInput) {
  const ForceField f = builtin_field("demo");
  EXPECT_THROW(oracle_scattering(f, make_vec({0.1, 0.0}), make_vec({0.0, 1.0})), InfeasibleError);
}

TEST(Oracle, UniformTimes) {
  const auto t = uniform_times(-1.0, 1.0, 5);
  ASSERT_EQ(t.size(), 5u);
  EXPECT_DOUBLE_EQ(t.front(), -1.0);
  EXPECT_DOUBLE_EQ(t[2], 0.0);
  EXPECT_DOUBLE_EQ(t.back(), 1.0);
}
