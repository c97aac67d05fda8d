#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include <gtest/gtest.h>

#include "ergo/mc.hpp"

using namespace ergo;

namespace {

const GFunction kG(0.25, 1.0);

GDiffusionModel g_ou(double alpha, GFunction g = kG) { return make_builtin("g_ou", {alpha}, g); }

// Euler-Maruyama variances of X_k for dX = -alpha X dt + sqrt(c) dW from 0:
// v_{k+1} = (1 - alpha dt)^2 v_k + c dt.
std::vector<double> euler_variances(double alpha, double c, double dt, long n) {
  std::vector<double> v(n + 1, 0.0);
  for (long k = 0; k < n; ++k) v[k + 1] = (1 - alpha * dt) * (1 - alpha * dt) * v[k] + c * dt;
  return v;
}

McParams params(long n, double dt, std::uint64_t seed = 1) {
  McParams p;
  p.n_paths = n;
  p.dt = dt;
  p.seed = seed;
  return p;
}

}  // namespace

TEST(Simulate, ConstantPolicyTerminalSecondMoment) {
  for (double c : {0.25, 1.0}) {
    const auto est = simulate(g_ou(0.5), ControlPolicy::constant(c, kG), 0.0, parse("x^2"), 1.0,
                              params(40000, 1e-2));
    const double ref = euler_variances(0.5, c, 1e-2, 100).back();
    EXPECT_NEAR(est.mean, ref, 4 * est.std_error) << c;
  }
}

TEST(Simulate, RunningFunctionalIsLeftRiemannAverage) {
  const auto est = simulate(g_ou(0.5), ControlPolicy::constant(1.0, kG), 0.0, parse("x^2"), 2.0,
                            [] {
                              auto p = params(40000, 2e-2);
                              p.functional = Functional::running;
                              return p;
                            }());
  const auto v = euler_variances(0.5, 1.0, 2e-2, 100);
  double ref = 0.0;
  for (long k = 0; k < 100; ++k) ref += v[k];
  ref /= 100.0;
  EXPECT_NEAR(est.mean, ref, 4 * est.std_error);
  EXPECT_EQ(est.functional, Functional::running);
}

TEST(Simulate, SeededDeterminismAndPartitionIndependence) {
  const auto m = g_ou(0.5);
  const auto pol = ControlPolicy::constant(0.5, kG);
  auto p = params(3000, 1e-2, 42);
  p.threads = 1;
  const auto a = simulate(m, pol, 0.3, parse("x^4 - 3*x^2"), 1.0, p);
  const auto b = simulate(m, pol, 0.3, parse("x^4 - 3*x^2"), 1.0, p);
  p.threads = 3;
  const auto c = simulate(m, pol, 0.3, parse("x^4 - 3*x^2"), 1.0, p);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.mean, c.mean);
  EXPECT_EQ(a.std_error, c.std_error);
  p.seed = 43;
  EXPECT_NE(simulate(m, pol, 0.3, parse("x^4 - 3*x^2"), 1.0, p).mean, a.mean);
}

TEST(Simulate, ThreadCapFromEnvironment) {
  ::unsetenv("ERGO_THREADS");
  const int uncapped = worker_count(0, 1000);
  ::setenv("ERGO_THREADS", "2", 1);
  EXPECT_EQ(worker_count(0, 1000), std::min(uncapped, 2));
  ::setenv("ERGO_THREADS", "1", 1);
  EXPECT_EQ(worker_count(0, 1000), 1);
  EXPECT_EQ(worker_count(5, 3), 3);
  ::unsetenv("ERGO_THREADS");
  EXPECT_GE(worker_count(0, 1000), 1);
}

TEST(Simulate, PolicyOutsideIntervalRejected) {
  EXPECT_THROW(ControlPolicy::constant(2.0, kG), ModelError);
  EXPECT_THROW(ControlPolicy::constant(0.1, kG), ModelError);
  const auto wide = ControlPolicy::constant(2.0, GFunction(0.25, 2.0));
  EXPECT_THROW(simulate(g_ou(0.5), wide, 0.0, parse("x"), 1.0, params(10, 0.1)), ModelError);
}

TEST(Simulate, RecordedPathsCsv) {
  auto p = params(10, 0.25);
  p.record_paths = 2;
  const auto est = simulate(g_ou(0.5), ControlPolicy::constant(1.0, kG), 1.0, parse("x"), 1.0, p);
  ASSERT_EQ(est.paths.size(), 2u * 5u);
  EXPECT_EQ(est.paths[0].x, 1.0);
  std::ostringstream os;
  write_paths_csv(est, os);
  EXPECT_EQ(os.str().substr(0, 12), "t,path_id,x\n");
}

TEST(Simulate, NonFiniteReported) {
  const auto m = make_custom("x^3", "0", "1");
  EXPECT_THROW(simulate(m, ControlPolicy::constant(1.0, kG), 3.0, parse("x"), 5.0, params(4, 0.1)),
               NumericError);
}

TEST(BangBang, PolicyShapes) {
  const auto m = g_ou(0.5);
  SolveOptions so;
  so.slices.uniform = 20;
  const auto up = bang_bang_policy(m, solve(m, parse("x^2"), 1.0, Grid1D{}, std::nullopt, so));
  const auto dn = bang_bang_policy(m, solve(m, parse("-x^2"), 1.0, Grid1D{}, std::nullopt, so));
  for (double t : {0.0, 0.5, 1.0})
    for (double x : {-3.0, -0.2, 0.0, 1.7}) {
      EXPECT_EQ(up(t, x), 1.0);
      EXPECT_EQ(dn(t, x), 0.25);
    }
  // At forward time t = 1 the policy reads the t = 0 slice, i.e. f itself:
  // f'' = 12x^2 - 6 changes sign at |x| = 1/sqrt(2).
  const auto q = bang_bang_policy(m, solve(m, parse("x^4 - 3*x^2"), 1.0, Grid1D{}, std::nullopt, so));
  EXPECT_EQ(q(1.0, 0.0), 0.25);
  EXPECT_EQ(q(1.0, 0.6), 0.25);
  EXPECT_EQ(q(1.0, 0.8), 1.0);
  EXPECT_EQ(q(1.0, -2.0), 1.0);
}

TEST(BangBang, ModelMismatchRejected) {
  const auto sol = solve(g_ou(0.5), parse("x^2"), 0.5, Grid1D{-8.0, 8.0, 161});
  EXPECT_THROW(bang_bang_policy(g_ou(1.0), sol), Error);
  EXPECT_THROW(bang_bang_policy(g_ou(0.5, GFunction(0.5, 1.0)), sol), Error);
}

TEST(BangBang, NearOptimalAndLowerBound) {
  const auto m = g_ou(0.5);
  SolveOptions so;
  so.slices.uniform = 100;
  for (const char* src : {"x^2", "-x^2", "x^4 - 3*x^2", "abs(x)"}) {
    const Expr f = parse(src);
    const auto sol = solve(m, f, 1.0, Grid1D{}, std::nullopt, so);
    const double pde = sol.evaluate(1.0, 0.0);
    const auto bb = bang_bang_policy(m, sol);
    const auto lb = lower_bound(
        m, f, 0.0, 1.0, {ControlPolicy::constant(0.25, kG), ControlPolicy::constant(1.0, kG), bb},
        params(20000, 2e-3, 5));
    const auto& best = lb.estimates[lb.best];
    EXPECT_LE(lb.value, pde + 3 * best.std_error + 0.05) << src;
    EXPECT_NEAR(lb.estimates[2].mean, pde, 2e-2 + 3 * lb.estimates[2].std_error) << src;
  }
  EXPECT_THROW(lower_bound(m, parse("x"), 0.0, 1.0, {}, params(10, 0.1)), Error);
}

// Euler differences of two coupled linear paths shrink by (1 - k dt) per step,
// so the measured rate is -log(1 - k dt)/dt regardless of noise or scenario.
TEST(Contraction, LinearDriftExact) {
  const double dt = 1e-3;
  auto p = params(8, dt);
  EXPECT_NEAR(contraction_check(g_ou(0.5), 2.0, -1.0, 1.0, p), -std::log(1 - 0.5 * dt) / dt, 1e-10);
  EXPECT_NEAR(contraction_check(make_builtin("gou_bracket", {2.0}), 2.0, -1.0, 1.0, p),
              -std::log(1 - dt) / dt, 1e-10);
  p.dt = 1e-6;
  p.n_paths = 4;
  EXPECT_NEAR(contraction_check(g_ou(0.5), 2.0, -1.0, 1.0, p), 0.5, 1e-6);
  EXPECT_THROW(contraction_check(g_ou(0.5), 1.0, 1.0, 1.0, p), Error);
}

TEST(Contraction, AtLeastDissipativityMargin) {
  const auto m = make_custom("-x - 0.1*x", "0", "1");
  const double eta = estimate_h2_eta(m, {-4.0, 4.0}, 41).eta_estimate;
  EXPECT_GE(contraction_check(m, 1.5, -0.5, 2.0, params(16, 1e-3)), 0.9 * eta);
}

TEST(Moments, FourthMomentStaysBounded) {
  const auto m = g_ou(0.5);
  const auto hi = ControlPolicy::constant(1.0, kG);
  const double at1 = simulate(m, hi, 0.0, parse("x^4"), 1.0, params(20000, 1e-2)).mean;
  for (double t : {2.0, 4.0, 8.0})
    EXPECT_LE(simulate(m, hi, 0.0, parse("x^4"), t, params(20000, 1e-2)).mean, 10 * at1) << t;
}
