#include <cmath>

#include <gtest/gtest.h>

#include "newtonscat/errors.hpp"
#include "newtonscat/scattering.hpp"
#include "test_support.hpp"

using namespace newtonscat;

namespace {

const Flavor kSolverFlavors[] = {Flavor::kStandard, Flavor::kModified, Flavor::kIterateN};

Vec rotate(const Vec& v, double phi) {
  return make_vec({std::cos(phi) * v(0) - std::sin(phi) * v(1), std::sin(phi) * v(0) + std::cos(phi) * v(1)});
}

}  // namespace

TEST(Scattering, FlavorNamesRoundTrip) {
  for (Flavor f : {Flavor::kStandard, Flavor::kModified, Flavor::kIterateN, Flavor::kOracle})
    EXPECT_EQ(flavor_from_string(to_string(f)), f);
  EXPECT_EQ(flavor_from_string("iterate"), Flavor::kIterateN);
  EXPECT_THROW(flavor_from_string("quantum"), ConfigError);
}

TEST(Scattering, ZeroFieldHasNoScattering) {
  const ForceField f = builtin_field("zero");
  for (Flavor fl : kSolverFlavors) {
    const ScatteringDatum d = scatter(f, make_vec({3.0, 0.0}), make_vec({0.0, 0.5}), fl);
    EXPECT_LE(d.a_sc.norm(), 1e-12) << to_string(fl);
    EXPECT_LE(d.b_sc.norm(), 1e-12) << to_string(fl);
    EXPECT_LE((d.a - d.v_minus).norm(), 1e-12);
    EXPECT_LE((d.b - d.x_minus).norm(), 1e-12);
  }
}

TEST(Scattering, NonOrthogonalImpactIsRejected) {
  const ForceField f = builtin_field("demo");
  try {
    scatter(f, make_vec({1000.0, 0.0}), make_vec({0.5, 0.5}), Flavor::kStandard);
    FAIL() << "expected InfeasibleError";
  } catch (const InfeasibleError& e) {
    EXPECT_EQ(e.condition(), "orthogonality");
  }
}

TEST(Scattering, SlowInputIsInfeasible) {
  const ForceField f = builtin_field("demo");
  const double mu = mu_threshold(f.profile());
  EXPECT_THROW(scatter(f, make_vec({0.5 * mu, 0.0}), make_vec({0.0, 1.0}), Flavor::kStandard), InfeasibleError);
}

TEST(Scattering, EstimateChecksPassAtDemoInput) {
  const ForceField f = builtin_field("demo");
  for (Flavor fl : kSolverFlavors) {
    const ScatteringDatum d = scatter(f, make_vec({1607.0, 0.0}), make_vec({0.0, 1.0}), fl);
    EXPECT_FALSE(d.checks.empty() && fl != Flavor::kIterateN);
    for (const auto& c : d.checks) EXPECT_TRUE(c.pass) << to_string(fl) << " " << c.name << " " << c.lhs << " > " << c.rhs;
    EXPECT_LE(d.energy_error, 1e-12);
  }
}

// Random admissible inputs: energy conservation, breakdown consistency and
// agreement between the three parametrizations.
TEST(Scattering, RandomInputsProperty) {
  const ForceField f = builtin_field("demo");
  gen::Rng rng(5);
  for (int k = 0; k < 6; ++k) {
    const auto in = gen::admissible_input(f, rng, gen::uniform(rng, 1.5, 4.0), 1.2);
    const ScatteringDatum s = scatter(f, in.v, in.x, Flavor::kStandard);
    const ScatteringDatum m = scatter(f, in.v, in.x, Flavor::kModified);
    EXPECT_LE(s.energy_error, 1e-8);
    EXPECT_LE(m.energy_error, 1e-8);
    EXPECT_LE((s.l + s.l1 + s.l2 - s.b_sc).norm(), 1e-12 * (1.0 + s.b_sc.norm()));
    // a is the same physical quantity in both parametrizations.
    EXPECT_LE((s.a - m.a).norm(), 1e-7 * s.a_sc.norm() + 1e-15 * s.a.norm());
    for (const auto& c : s.checks) EXPECT_TRUE(c.pass) << c.name;
    for (const auto& c : m.checks) EXPECT_TRUE(c.pass) << c.name;
  }
}

TEST(Scattering, RotationEquivarianceOnRadialField) {
  const ForceField f = builtin_field("short_power");
  const Vec v = make_vec({50.0, 0.0}), x = make_vec({0.0, 0.7});
  const ScatteringDatum d0 = scatter(f, v, x, Flavor::kStandard);
  for (double phi : {0.3, 1.9, -2.4}) {
    const ScatteringDatum d = scatter(f, rotate(v, phi), rotate(x, phi), Flavor::kStandard);
    EXPECT_LE((d.a_sc - rotate(d0.a_sc, phi)).norm(), 1e-12 * d0.a_sc.norm() + 1e-16);
    EXPECT_LE((d.b_sc - rotate(d0.b_sc, phi)).norm(), 1e-10 * d0.b_sc.norm() + 1e-16);
  }
}

TEST(Scattering, ReflectionGivesOppositeDeflection) {
  const ForceField f = builtin_field("long_only");
  const ScatteringDatum up = scatter(f, make_vec({40.0, 0.0}), make_vec({0.0, 0.6}), Flavor::kStandard);
  const ScatteringDatum down = scatter(f, make_vec({40.0, 0.0}), make_vec({0.0, -0.6}), Flavor::kStandard);
  EXPECT_NEAR(up.a_sc(1), -down.a_sc(1), 1e-15);
  EXPECT_NEAR(up.a_sc(0), down.a_sc(0), 1e-15);
}

// ||A f1 - A f2|| <= lambda ||f1 - f2|| and ||A f|| <= rho on random M_r pairs.
TEST(IncomingOperator, ContractionProperty) {
  const ForceField f = builtin_field("demo");
  gen::Rng rng(17);
  for (Flavor fl : kSolverFlavors) {
    for (int k = 0; k < 8; ++k) {
      const auto in = gen::admissible_input(f, rng, gen::uniform(rng, 1.5, 3.0), 1.0, fl);
      const IncomingOperator op(f, in.v, in.x, fl);
      const double r = default_radius(op.x_minus().norm(), fl == Flavor::kModified);
      const BoundConstants c = bound_constants(f.profile(), op.x_minus().norm(), in.v.norm(), r);
      const double rho = fl == Flavor::kModified ? c.rho_tilde : c.rho;
      const MrFunction f1 = gen::random_mr(rng, op.grid(), 2, r, in.v.norm());
      const MrFunction f2 = gen::random_mr(rng, op.grid(), 2, r, in.v.norm());
      const MrFunction a1 = op.apply(f1), a2 = op.apply(f2);
      const double lhs = gen::difference(a1, a2).norm();
      const double rhs = c.lambda * gen::difference(f1, f2).norm();
      EXPECT_LE(lhs, rhs * (1.0 + 1e-9)) << to_string(fl) << " k=" << k;
      EXPECT_LE(a1.norm(), rho) << to_string(fl);
      EXPECT_LE(a2.norm(), rho) << to_string(fl);
    }
  }
}

TEST(IncomingOperator, RejectsForeignGrid) {
  const ForceField f = builtin_field("demo");
  const IncomingOperator op(f, make_vec({1607.0, 0.0}), make_vec({0.0, 1.0}), Flavor::kStandard);
  const auto other = make_scatter_grid(50.0, 1.0, ScatterConfig{});
  EXPECT_THROW(op.apply(MrFunction::zero(other, 2, 0.5)), UsageError);
}

TEST(IncomingOperator, PicardRatioBelowLambda) {
  const ForceField f = builtin_field("demo");
  for (Flavor fl : kSolverFlavors) {
    const IncomingSolution sol = solve_y_minus(f, make_vec({1607.0, 0.0}), make_vec({0.0, 1.0}), fl);
    EXPECT_LE(sol.measured_ratio, sol.constants.lambda) << to_string(fl);
    EXPECT_LE(sol.y_minus.norm(), sol.y_minus.r);
  }
}

TEST(ModifiedMap, ContractsInsideItsBall) {
  const ForceField f = builtin_field("demo");
  gen::Rng rng(23);
  for (int k = 0; k < 5; ++k) {
    const auto in = gen::admissible_input(f, rng, 2.0, 1.5, Flavor::kModified);
    const IncomingOperator op(f, in.v, in.x, Flavor::kModified);
    const IncomingSolution sol = solve_y_minus(op);
    const ModifiedFixedPoint fp = solve_b_tilde(op, sol.y_minus);
    EXPECT_LE(fp.contraction_measured, 0.1);
    EXPECT_LE(fp.b_tilde_sc.norm(), fp.ball_radius);
    EXPECT_NEAR(fp.ball_radius, 0.25 + op.x_minus().norm() / std::pow(2.0, 2.5), 1e-15);
    // Fixed point of the map.
    const ModifiedMap G(op, sol.y_minus);
    EXPECT_LE((G(fp.b_tilde_sc) - fp.b_tilde_sc).norm(), 1e-13 * (1.0 + fp.b_tilde_sc.norm()));
  }
}

TEST(Scattering, WIsStableUnderRefinement) {
  const ForceField f = builtin_field("demo");
  ScatterConfig cfg;
  cfg.refine_w = true;
  for (Flavor fl : kSolverFlavors) {
    const ScatteringDatum d = scatter(f, make_vec({1607.0, 0.0}), make_vec({0.0, 1.0}), fl, cfg);
    ASSERT_EQ(d.w.size(), 2);
    EXPECT_LE(d.w_error, 1e-10 * (d.w.norm() + 1e-12)) << to_string(fl);
  }
}

TEST(Scattering, MrNormOfZeroIsZero) {
  const auto g = make_scatter_grid(10.0, 1.0, ScatterConfig{});
  EXPECT_EQ(MrFunction::zero(g, 2, 0.5).norm(), 0.0);
}
