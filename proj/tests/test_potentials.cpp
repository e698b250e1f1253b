#include <cmath>

#include <gtest/gtest.h>

#include "newtonscat/errors.hpp"
#include "newtonscat/potentials.hpp"
#include "test_support.hpp"

using namespace newtonscat;

namespace {

// (1+|y|^2)^(-1/2) as a standalone long-range field.
ForceField unit_power_tail() {
  DecayProfile p;
  p.beta_long = {1.0, 1.0, 2.0};
  return ForceField("tail", Potential({PotentialTerm::power(2, 1.0, 1.0)}), Potential{}, p);
}

}  // namespace

TEST(Potentials, ZeroFieldIsZeroEverywhere) {
  const ForceField f = builtin_field("zero");
  gen::Rng rng(1);
  for (int k = 0; k < 20; ++k) {
    const Vec x = gen::random_unit(rng, 2) * gen::uniform(rng, 0.0, 10.0);
    EXPECT_EQ(f.potential(x), 0.0);
    EXPECT_EQ(f.force(x).norm(), 0.0);
  }
}

TEST(Potentials, PowerTailForceAtUnitPoint) {
  const ForceField f = unit_power_tail();
  const Vec F = f.long_force(make_vec({1.0, 0.0}));
  EXPECT_NEAR(F(0), std::pow(2.0, -1.5), 1e-15);
  EXPECT_NEAR(F(1), 0.0, 1e-15);
}

// (1+|y|^2)^(-1/2) (1+|y|) peaks at sqrt2 (|y| = 1), so beta0 = 1 is too
// small by exactly that factor.
TEST(Potentials, PowerTailDecayRatioPeaksAtSqrt2) {
  const DecayReport r = verify_decay(unit_power_tail(), 2000, 100.0);
  EXPECT_GT(r.long_ratio[0], 1.41);
  EXPECT_LE(r.long_ratio[0], std::sqrt(2.0) + 1e-12);
  EXPECT_FALSE(r.pass);

  DecayProfile p = unit_power_tail().profile();
  p.beta_long[0] = std::sqrt(2.0);
  const ForceField fixed("tail", Potential({PotentialTerm::power(2, 1.0, 1.0)}), Potential{}, p);
  const DecayReport ok = verify_decay(fixed, 2000, 100.0);
  EXPECT_LE(ok.long_ratio[0], 1.0 + 1e-12);
}

TEST(Potentials, GradientMatchesFiniteDifferencesForEveryBuiltin) {
  for (const auto& name : builtin_field_names())
    EXPECT_LE(gradient_consistency_error(builtin_field(name), 100, 1.0), 1e-6) << name;
}

TEST(Potentials, BuiltinDecayConstantsVerify) {
  for (const auto& name : builtin_field_names()) {
    const DecayReport r = verify_decay(builtin_field(name), 400, 50.0);
    EXPECT_TRUE(r.pass) << name;
  }
}

TEST(Potentials, ZeroFieldDecayRatiosVanish) {
  const DecayReport r = verify_decay(builtin_field("zero"), 50, 10.0);
  EXPECT_TRUE(r.pass);
  for (int j = 0; j < 3; ++j) {
    EXPECT_EQ(r.long_ratio[static_cast<std::size_t>(j)], 0.0);
    EXPECT_EQ(r.short_ratio[static_cast<std::size_t>(j)], 0.0);
  }
}

TEST(Potentials, UnderstatedGaussianConstantsFail) {
  const nlohmann::json spec = {
      {"alpha", 1.0},
      {"short_range", {{{"family", "gaussian"}, {"strength", 1.0}, {"width", 1.0}}}},
      {"profile", {{"beta_long", {0, 0, 0}}, {"beta_short", {0.01, 0.01, 0.01}}}}};
  const DecayReport r = verify_decay(field_from_json(spec), 200, 10.0);
  EXPECT_FALSE(r.pass);
  EXPECT_GT(std::max({r.short_ratio[0], r.short_ratio[1], r.short_ratio[2]}), 1.0);
}

TEST(Potentials, ForceSplitsIntoParts) {
  const ForceField f = builtin_field("demo");
  gen::Rng rng(2);
  for (int k = 0; k < 20; ++k) {
    const Vec x = gen::random_unit(rng, 2) * gen::uniform(rng, 0.0, 5.0);
    const auto [Fl, Fs] = eval_split_force(f, x);
    EXPECT_LE((Fl + Fs - f.force(x)).norm(), 1e-16);
  }
}

TEST(Potentials, SplitForceRejectsBadInput) {
  const ForceField f = builtin_field("demo");
  EXPECT_THROW(eval_split_force(f, make_vec({1.0, 2.0, 3.0})), DomainError);
  EXPECT_THROW(eval_split_force(f, make_vec({NAN, 0.0})), DomainError);
}

TEST(Potentials, MuThresholdClosedForm) {
  const DecayProfile& p = builtin_field("demo").profile();
  const double expected = std::sqrt(32.0 * 2 * std::max(p.beta1_long(), p.beta2_long()) / p.alpha);
  EXPECT_NEAR(mu_threshold(p), expected, 1e-14 * expected);
  EXPECT_LT(mu_of_sigma(p, 2.0), mu_threshold(p));
  EXPECT_DOUBLE_EQ(mu_of_sigma(p, 0.0), mu_threshold(p));
}

TEST(Potentials, ScalingMultipliesForce) {
  const ForceField f = builtin_field("demo");
  const ForceField g = f.scaled(0.25);
  const Vec x = make_vec({0.4, -0.9});
  EXPECT_LE((g.force(x) - 0.25 * f.force(x)).norm(), 1e-17);
  EXPECT_NEAR(g.profile().beta_max(), 0.25 * f.profile().beta_max(), 1e-15);
}

TEST(Potentials, JsonRejectsUnknownKeys) {
  EXPECT_THROW(field_from_json({{"builtin", "demo"}, {"colour", 1}}), ConfigError);
  EXPECT_THROW(field_from_json({{"builtin", "nope"}}), ConfigError);
  EXPECT_THROW(field_from_json({{"alpha", 1.0}}), ConfigError);
}

TEST(Potentials, ProfileValidation) {
  DecayProfile p;
  p.alpha = 1.5;
  EXPECT_THROW(p.validate(), DomainError);
  p.alpha = 0.5;
  p.beta_long[0] = -1.0;
  EXPECT_THROW(p.validate(), DomainError);
}

TEST(Potentials, EnergyAtRestIsPotential) {
  const ForceField f = builtin_field("demo");
  const Vec x = make_vec({0.1, 0.2});
  EXPECT_DOUBLE_EQ(f.energy(x, zero_vec(2)), f.potential(x));
}
