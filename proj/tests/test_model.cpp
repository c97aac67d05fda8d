#include <cmath>

#include <gtest/gtest.h>

#include "ergo/model.hpp"

using ergo::make_builtin;

TEST(Model, GOuCoefficients) {
  const auto m = make_builtin("g_ou", {0.5});
  for (double x : {-3.0, 0.0, 1.5}) {
    EXPECT_DOUBLE_EQ(m.b(x), -0.5 * x);
    EXPECT_EQ(m.h(x), 0.0);
    EXPECT_EQ(m.sigma(x), 1.0);
  }
  EXPECT_EQ(m.g, ergo::GFunction(0.25, 1.0));
  EXPECT_EQ(m.p, 2);
}

TEST(Model, BracketCoefficients) {
  const auto m = make_builtin("gou_bracket", {2.0});
  EXPECT_DOUBLE_EQ(m.b(0.5), 1.5);
  EXPECT_EQ(m.h(0.5), 1.0);
  EXPECT_EQ(m.sigma(0.5), 1.0);
}

TEST(Model, DiracVanishesAtZero) {
  const auto m = make_builtin("dirac", {});
  EXPECT_EQ(m.b(0.0), 0.0);
  EXPECT_EQ(m.h(0.0), 0.0);
  EXPECT_EQ(m.sigma(0.0), 0.0);
  EXPECT_NE(m.sigma(1.0), 0.0);
}

TEST(Model, Errors) {
  EXPECT_THROW(make_builtin("nope", {}), ergo::ModelError);
  EXPECT_THROW(make_builtin("g_ou", {}), ergo::ModelError);
  EXPECT_THROW(make_builtin("g_ou", {0.5, 1.0}), ergo::ModelError);
  EXPECT_THROW(make_builtin("dirac", {1.0}), ergo::ModelError);
  EXPECT_THROW(make_builtin("g_ou", {-1.0}), ergo::ModelError);
  EXPECT_THROW(make_builtin("custom", {}), ergo::ModelError);
  EXPECT_THROW(ergo::make_custom("-x", "0", "1", {}, 0), ergo::ModelError);
  EXPECT_THROW(ergo::make_custom("-x +", "0", "1"), ergo::ParseError);
}

TEST(Model, OverrideG) {
  const auto m = make_builtin("g_ou", {0.5}, ergo::GFunction(0.5, 2.0));
  EXPECT_EQ(m.g.sigma_lo_sq(), 0.5);
  EXPECT_EQ(m.with_g(ergo::GFunction(1.0, 1.0)).g.sigma_hi_sq(), 1.0);
}

TEST(Assumptions, GOuEtaAndLipschitz) {
  const auto r = ergo::estimate_h2_eta(make_builtin("g_ou", {0.5}), {-4.0, 4.0}, 41);
  EXPECT_NEAR(r.eta_estimate, 0.5, 1e-12);
  EXPECT_NEAR(r.lipschitz_estimate, 0.5, 1e-12);
  EXPECT_EQ(r.sample_count, 41 * 40);
}

TEST(Assumptions, BracketEta) {
  const auto r = ergo::estimate_h2_eta(make_builtin("gou_bracket", {2.0}), {-4.0, 4.0}, 41);
  EXPECT_NEAR(r.eta_estimate, 1.0, 1e-12);
}

// Dyadic grid points make the difference quotients exact.
TEST(Assumptions, AffineDriftExact) {
  for (double k : {0.25, 0.5, 1.0, 2.0}) {
    const auto m = ergo::make_custom("-" + std::to_string(k) + "*x + 3", "0.5", "2");
    const auto r = ergo::estimate_h2_eta(m, {-8.0, 8.0}, 33);
    EXPECT_EQ(r.eta_estimate, k);
    EXPECT_EQ(r.lipschitz_estimate, k);
  }
}

TEST(Assumptions, NonDissipativeReportedNotThrown) {
  const auto r = ergo::estimate_h2_eta(ergo::make_custom("x", "0", "1"), {-2.0, 2.0}, 11);
  EXPECT_LT(r.eta_estimate, 0.0);
}

// Nested probe sets: widening keeps the old points, refining (n -> 2n - 1)
// keeps them too, so the infimum can only go down.
TEST(Assumptions, EtaMonotoneUnderWideningAndRefinement) {
  const auto m = ergo::make_custom("-x - 0.1*x^3 + 0.3*x^2", "0.2*x", "0.5*x*exp(-x^2)");
  const auto base = ergo::estimate_h2_eta(m, {-2.0, 2.0}, 21);
  const auto wide = ergo::estimate_h2_eta(m, {-4.0, 4.0}, 41);
  const auto fine = ergo::estimate_h2_eta(m, {-2.0, 2.0}, 41);
  EXPECT_LE(wide.eta_estimate, base.eta_estimate);
  EXPECT_LE(fine.eta_estimate, base.eta_estimate);
}

TEST(Assumptions, BadArguments) {
  const auto m = make_builtin("g_ou", {0.5});
  EXPECT_THROW(ergo::estimate_h2_eta(m, {-1.0, 1.0}, 1), ergo::ModelError);
  EXPECT_THROW(ergo::estimate_h2_eta(m, {1.0, 1.0}, 5), ergo::ModelError);
}
