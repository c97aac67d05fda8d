#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ergo/gfunc.hpp"

using ergo::GFunction;

TEST(GFunction, Examples) {
  const GFunction g(0.25, 1.0);
  EXPECT_EQ(ergo::g_eval(g, 2.0), 1.0);
  EXPECT_EQ(ergo::g_eval(g, -2.0), -0.25);
  EXPECT_EQ(ergo::g_eval(g, 0.0), 0.0);
  EXPECT_EQ(ergo::g_eval(GFunction(0.0, 3.0), 0.0), 0.0);
}

TEST(GFunction, Nondegeneracy) {
  EXPECT_TRUE(ergo::check_nondegenerate(GFunction(0.25, 1.0)));
  EXPECT_FALSE(ergo::check_nondegenerate(GFunction(0.0, 1.0)));
  EXPECT_TRUE(ergo::check_nondegenerate(GFunction(1.0, 1.0)));
  EXPECT_TRUE(GFunction(1.0, 1.0).classical());
}

TEST(GFunction, InvalidIntervalRejected) {
  EXPECT_THROW(GFunction(-0.1, 1.0), ergo::ModelError);
  EXPECT_THROW(GFunction(0.5, 0.25), ergo::ModelError);
  EXPECT_THROW(GFunction(0.0, 0.0), ergo::ModelError);
  EXPECT_THROW(GFunction(0.1, NAN), ergo::ModelError);
}

TEST(GFunction, Argmax) {
  const GFunction g(0.25, 1.0);
  EXPECT_EQ(g.argmax(3.0), 1.0);
  EXPECT_EQ(g.argmax(-3.0), 0.25);
}

// Dyadic inputs keep every sum, product and halving exact in binary floating
// point, so the axioms can be compared without tolerance.
TEST(GFunction, AxiomsExactOnRandomPairs) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> pick(-(1 << 20), 1 << 20);
  auto dyadic = [&] { return std::ldexp(static_cast<double>(pick(rng)), -12); };
  for (const GFunction g : {GFunction(0.25, 1.0), GFunction(0.0, 2.0), GFunction(0.5, 0.5)}) {
    for (int k = 0; k < 1000; ++k) {
      const double a = dyadic(), b = dyadic();
      const double lam = std::ldexp(1.0, static_cast<int>(rng() % 9) - 4);
      const double hi = std::max(a, b), lo = std::min(a, b);
      ASSERT_GE(g(hi), g(lo));
      ASSERT_LE(g(a + b), g(a) + g(b));
      ASSERT_EQ(g(lam * a), lam * g(a));
      ASSERT_LE(std::fabs(g(a)), 0.5 * g.sigma_hi_sq() * std::fabs(a));
      ASSERT_GE(g(hi) - g(lo), 0.5 * g.sigma_lo_sq() * (hi - lo));
    }
  }
}
