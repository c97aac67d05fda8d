#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "ergo/expr.hpp"
#include "ergo/measures.hpp"

using ergo::Expr;
using ergo::parse;

TEST(Parse, PolynomialAtTwo) { EXPECT_DOUBLE_EQ(parse("x^4 - 3*x^2")(2.0), 4.0); }

TEST(Parse, PositivePartViaMax) {
  const Expr e = parse("max(0, 1 - x^2)");
  EXPECT_DOUBLE_EQ(e(0.0), 1.0);
  EXPECT_DOUBLE_EQ(e(2.0), 0.0);
}

TEST(Parse, ScaledQuartic) { EXPECT_DOUBLE_EQ(parse("0.5*x^4")(1.0), 0.5); }

TEST(Eval, ExpAndAbs) {
  EXPECT_DOUBLE_EQ(ergo::eval(parse("exp(-x)"), 0.0), 1.0);
  EXPECT_DOUBLE_EQ(ergo::eval(parse("abs(x) - 1"), -3.0), 2.0);
}

TEST(Eval, BoundConstantMatchesBranchPolynomial) {
  const double s = 0.25;
  const Expr e = parse("x^4 + 3*(s-1)*x^2 + 0.75*s^2 - 1.5*s", {{"s", s}});
  for (double x : {-2.0, -0.3, 0.0, 0.7, 1.9})
    EXPECT_NEAR(e(x), ergo::gap_branch_lo(x, s), 1e-14);
}

TEST(Parse, Precedence) {
  EXPECT_DOUBLE_EQ(parse("-x^2")(3.0), -9.0);   // ^ binds tighter than unary minus
  EXPECT_DOUBLE_EQ(parse("2*3 + 4")(0.0), 10.0);
  EXPECT_DOUBLE_EQ(parse("2 + 3*4")(0.0), 14.0);
  EXPECT_DOUBLE_EQ(parse("8/4/2")(0.0), 1.0);
  EXPECT_DOUBLE_EQ(parse("10 - 4 - 3")(0.0), 3.0);
  EXPECT_DOUBLE_EQ(parse("(x + 1)^2")(2.0), 9.0);
  EXPECT_DOUBLE_EQ(parse("x^-1")(4.0), 0.25);
  EXPECT_DOUBLE_EQ(parse("x^(-2)")(2.0), 0.25);
  EXPECT_DOUBLE_EQ(parse("1e-3*x")(1000.0), 1.0);
}

TEST(Parse, Functions) {
  EXPECT_DOUBLE_EQ(parse("pos(x)")(-2.0), 0.0);
  EXPECT_DOUBLE_EQ(parse("pos(x)")(2.0), 2.0);
  EXPECT_DOUBLE_EQ(parse("negpart(x)")(-2.0), 2.0);
  EXPECT_DOUBLE_EQ(parse("negpart(x)")(2.0), 0.0);
  EXPECT_DOUBLE_EQ(parse("min(x, 1)")(3.0), 1.0);
  EXPECT_DOUBLE_EQ(parse("sqrt(x)")(9.0), 3.0);
  EXPECT_DOUBLE_EQ(parse("log(exp(x))")(1.5), 1.5);
}

TEST(Parse, SyntaxErrorsCarryOffset) {
  try {
    parse("x + * 2");
    FAIL() << "expected ParseError";
  } catch (const ergo::ParseError& e) {
    EXPECT_EQ(e.offset(), 4u);
  }
  EXPECT_THROW(parse(""), ergo::ParseError);
  EXPECT_THROW(parse("(x + 1"), ergo::ParseError);
  EXPECT_THROW(parse("x 2"), ergo::ParseError);
  EXPECT_THROW(parse("max(x)"), ergo::ParseError);
}

TEST(Parse, UnknownIdentifier) {
  EXPECT_THROW(parse("y + 1"), ergo::ParseError);
  EXPECT_THROW(parse("sin(x)"), ergo::ParseError);
}

TEST(Parse, NonIntegerAndChainedExponentsRejected) {
  EXPECT_THROW(parse("x^0.5"), ergo::ParseError);
  EXPECT_THROW(parse("x^2^2"), ergo::ParseError);
  EXPECT_THROW(parse("x^y"), ergo::ParseError);
}

TEST(Eval, DomainErrorsThrow) {
  EXPECT_THROW(parse("1/x")(0.0), ergo::EvalError);
  EXPECT_THROW(parse("log(x)")(0.0), ergo::EvalError);
  EXPECT_THROW(parse("log(x)")(-1.0), ergo::EvalError);
  EXPECT_THROW(parse("sqrt(x)")(-1e-12), ergo::EvalError);
  EXPECT_THROW(parse("x^-2")(0.0), ergo::EvalError);
  EXPECT_NO_THROW(parse("sqrt(x)")(0.0));
}

TEST(Print, RoundTripOnProbeGrid) {
  const std::vector<std::string> sources = {
      "x^4 - 3*x^2", "max(0, 1 - x^2)", "exp(-x)*x^2", "abs(x) - 1", "-x^2 + 0.1*x^3",
      "min(x, -x) / 3", "pos(x - 1) - negpart(x + 1)", "2^-1 * x", "-(x - 2)^3", "1e-7*x^5"};
  for (const auto& src : sources) {
    const Expr e = parse(src);
    const Expr back = parse(e.str());
    for (int i = 0; i < 100; ++i) {
      const double x = -5.0 + 10.0 * i / 99.0;
      EXPECT_EQ(e(x), back(x)) << src << " -> " << e.str() << " at " << x;
    }
  }
}

TEST(Parse, PureFunctionOfText) {
  const Expr a = parse("exp(-x)*x^2 - abs(x)");
  const Expr b = parse("exp(-x)*x^2 - abs(x)");
  for (double x = -4.0; x <= 4.0; x += 0.37) EXPECT_EQ(a(x), b(x));
}

TEST(Deriv, Examples) {
  EXPECT_DOUBLE_EQ(ergo::deriv(parse("x^4 - 3*x^2"), 1)(1.0), -2.0);
  EXPECT_DOUBLE_EQ(ergo::deriv(parse("0.5*x^4"), 2)(2.0), 24.0);
  EXPECT_DOUBLE_EQ(ergo::deriv(parse("7"), 1)(3.0), 0.0);
  EXPECT_DOUBLE_EQ(ergo::deriv(parse("1/x"), 1)(2.0), -0.25);
  EXPECT_DOUBLE_EQ(ergo::deriv(parse("log(x)"), 2)(2.0), -0.25);
  EXPECT_NEAR(ergo::deriv(parse("sqrt(x)"), 1)(4.0), 0.25, 1e-15);
}

TEST(Deriv, NonSmoothRejected) {
  for (const char* src : {"abs(x)", "max(0, x)", "min(x, 1)", "pos(x)", "negpart(x)", "x*abs(x)"})
    EXPECT_THROW(ergo::deriv(parse(src), 1), ergo::NonSmoothError) << src;
  EXPECT_THROW(ergo::deriv(parse("x"), 3), ergo::Error);
}

TEST(Deriv, FirstDerivativeMatchesCentralDifference) {
  const Expr f = parse("exp(-x)*x^2");
  const Expr d = ergo::deriv(f, 1);
  const double h = 1e-5;
  for (int i = 0; i < 50; ++i) {
    const double x = -5.0 + 10.0 * (i + 0.5) / 50.0;
    const double fd = (f(x + h) - f(x - h)) / (2 * h);
    EXPECT_LE(std::fabs(fd - d(x)), 1e-6 * std::max(1.0, std::fabs(d(x)))) << x;
  }
}

// Second derivatives are checked against the central difference of the
// symbolic first derivative: a direct second difference of f at step 1e-5
// loses about eps*|f|/h^2 ~ 1e-6 relative to round-off on these magnitudes.
TEST(Deriv, DictionaryDerivativesMatchCentralDifferences) {
  const double h = 1e-5;
  for (const auto& entry : ergo::default_dictionary()) {
    if (!entry.f.is_smooth()) continue;
    const Expr d1 = ergo::deriv(entry.f, 1);
    const Expr d2 = ergo::deriv(entry.f, 2);
    for (int i = 0; i < 50; ++i) {
      const double x = -5.0 + 10.0 * (i + 0.5) / 50.0;
      const double fd1 = (entry.f(x + h) - entry.f(x - h)) / (2 * h);
      const double fd2 = (d1(x + h) - d1(x - h)) / (2 * h);
      EXPECT_LE(std::fabs(fd1 - d1(x)), 1e-6 * std::max(1.0, std::fabs(d1(x)))) << entry.label;
      EXPECT_LE(std::fabs(fd2 - d2(x)), 1e-6 * std::max(1.0, std::fabs(d2(x)))) << entry.label;
    }
  }
}

TEST(Expr, SmoothnessFlag) {
  EXPECT_TRUE(parse("exp(-x)*x^2").is_smooth());
  EXPECT_FALSE(parse("x + abs(x)").is_smooth());
  EXPECT_TRUE(parse("3").is_constant());
  EXPECT_FALSE(parse("x").is_constant());
}

TEST(Expr, DeepExpressionsEvaluate) {
  std::string src = "x";
  for (int i = 0; i < 60; ++i) src = "(" + src + " + 1)";
  EXPECT_DOUBLE_EQ(parse(src)(0.0), 60.0);
}
