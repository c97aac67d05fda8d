#pragma once

// End-to-end verification suite: thirteen numbered checks, each returning a
// PASS/FAIL verdict with a one-line detail. Shared by `ergo paper-checks`
// and the acceptance test binary.

#include <algorithm>
#include <cstdarg>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ergo/error.hpp"
#include "ergo/expr.hpp"
#include "ergo/gfunc.hpp"
#include "ergo/longtime.hpp"
#include "ergo/mc.hpp"
#include "ergo/measures.hpp"
#include "ergo/model.hpp"
#include "ergo/pde.hpp"

namespace ergo {

struct CheckResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

namespace checks {

// Accumulates sub-conditions of one check. Failed conditions form the
// detail of a FAIL, notes form the detail of a PASS.
class Verdict {
 public:
  void require(bool ok, const char* fmt, ...) __attribute__((format(printf, 3, 4))) {
    va_list ap;
    va_start(ap, fmt);
    append(ok ? summary_ : failures_, fmt, ap);
    va_end(ap);
    ok_ = ok_ && ok;
  }
  // Like require, but silent on success.
  void expect(bool ok, const char* fmt, ...) __attribute__((format(printf, 3, 4))) {
    if (ok) return;
    va_list ap;
    va_start(ap, fmt);
    append(failures_, fmt, ap);
    va_end(ap);
    ok_ = false;
  }
  void note(const char* fmt, ...) __attribute__((format(printf, 2, 3))) {
    va_list ap;
    va_start(ap, fmt);
    append(summary_, fmt, ap);
    va_end(ap);
  }
  bool ok() const { return ok_; }
  std::string detail() const { return ok_ ? summary_ : failures_; }

 private:
  static void append(std::string& out, const char* fmt, va_list ap) {
    char buf[320];
    std::vsnprintf(buf, sizeof buf, fmt, ap);
    if (!out.empty()) out += "; ";
    out += buf;
  }

  bool ok_ = true;
  std::string summary_;
  std::string failures_;
};

inline const GFunction kG{0.25, 1.0};

inline GDiffusionModel g_ou(double alpha, GFunction g = kG) {
  return make_builtin("g_ou", {alpha}, g);
}

inline Verdict gnormal_moments() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const double up = g_normal_expectation(kG, parse("x^2"), 1.0);
  const double dn = g_normal_expectation(kG, parse("-x^2"), 1.0);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  v.require(std::fabs(up - 1.0) <= 1e-3, "E[x^2]=%.6f", up);
  v.require(std::fabs(dn + 0.25) <= 1e-3, "E[-x^2]=%.6f", dn);
  v.require(secs < 10.0, "runtime %.2fs", secs);
  return v;
}

inline Verdict ou_marginal_law() {
  Verdict v;
  const auto m = g_ou(0.5);
  const double alpha = 0.5;
  double worst = 0.0;
  for (const char* src : {"x^2", "-x^2", "x^4 - 3*x^2"}) {
    const Expr f = parse(src);
    SolveOptions so;
    so.slices.extra_times = {0.5, 1.0, 2.0};
    const auto sol = solve(m, f, 2.0, Grid1D{}, std::nullopt, so);
    for (double t : {0.5, 1.0, 2.0}) {
      const double var = (1.0 - std::exp(-2.0 * alpha * t)) / (2.0 * alpha);
      const double lhs = sol.evaluate(t, 0.0);
      const double rhs = g_normal_expectation(kG, f, var);
      worst = std::max(worst, std::fabs(lhs - rhs));
      v.expect(std::fabs(lhs - rhs) <= 1e-2, "%s t=%g: %.5f vs %.5f", src, t, lhs, rhs);
    }
  }
  v.note("max diff %.2e", worst);
  return v;
}

inline Verdict ou_invariant_values() {
  Verdict v;
  const auto m = g_ou(0.5);
  const auto up = invariant_value(m, parse("x^2"));
  const auto dn = invariant_value(m, parse("-x^2"));
  v.require(std::fabs(up.lambda_bar - 1.0) <= 1e-2, "lambda_bar[x^2]=%.5f", up.lambda_bar);
  v.require(std::fabs(dn.lambda_bar + 0.25) <= 1e-2, "lambda_bar[-x^2]=%.5f", dn.lambda_bar);
  v.require(up.x_dependence_defect <= 2e-2 && dn.x_dependence_defect <= 2e-2,
            "x-defects %.1e, %.1e", up.x_dependence_defect, dn.x_dependence_defect);
  return v;
}

inline Verdict convergence_rate() {
  Verdict v;
  for (double alpha : {0.5, 1.0}) {
    const auto r = invariant_value(g_ou(alpha), parse("x^2"));
    v.require(r.rate_estimate >= 0.9 * alpha, "alpha=%g rate=%.4f", alpha, r.rate_estimate);
  }
  return v;
}

inline Verdict ergodic_zero() {
  Verdict v;
  const auto r = ergodic_value(g_ou(0.5), parse("x^4 - 3*x^2"));
  v.require(std::fabs(r.lambda) <= 2e-2, "lambda=%.2e", r.lambda);
  v.require(r.method_disagreement <= 3e-2, "disagreement=%.2e", r.method_disagreement);
  return v;
}

inline Verdict strict_gap() {
  Verdict v;
  const auto gb = gap_lower_bound(0.25);
  const double lb = invariant_value(g_ou(0.5), parse("x^4 - 3*x^2")).lambda_bar;
  v.require(lb >= gb.bound_value - 2e-2, "lambda_bar=%.5f bound=%.5f", lb, gb.bound_value);
  v.require(lb >= gb.floor_value && gb.floor_value > 0.0, "floor=%.5f", gb.floor_value);
  return v;
}

inline Verdict ergodic_pde_solutions() {
  Verdict v;
  const auto m = g_ou(0.5);
  const double r4 = ergodic_residual(m, parse("0.5*x^4"));
  const double r2 = ergodic_residual(m, parse("x^2"));
  v.require(std::fabs(r4) <= 2e-2, "residual[x^4/2]=%.2e", r4);
  v.require(std::fabs(r2) <= 2e-2, "residual[x^2]=%.2e", r2);

  // E_1[-G(2 - 2B^2)] by quadrature against (lo - 1) E_1[(1 - B^2)^+] = (lo - 1) 2 phi(1).
  const GFunction& g = kG;
  auto integrand = [&](double y) {
    return -g(2.0 - 2.0 * y * y) * std::exp(-0.5 * y * y) / std::sqrt(2.0 * std::numbers::pi);
  };
  using boost::math::quadrature::gauss_kronrod;
  const double inf = std::numeric_limits<double>::infinity();
  const double quad = gauss_kronrod<double, 61>::integrate(integrand, -inf, -1.0, 15, 1e-14) +
                      gauss_kronrod<double, 61>::integrate(integrand, -1.0, 1.0, 15, 1e-14) +
                      gauss_kronrod<double, 61>::integrate(integrand, 1.0, inf, 15, 1e-14);
  const double closed =
      (g.sigma_lo_sq() - 1.0) * 2.0 * std::exp(-0.5) / std::sqrt(2.0 * std::numbers::pi);
  v.require(std::fabs(quad - closed) <= 1e-6, "E[-G(2-2B^2)]=%.8f vs %.8f", quad, closed);
  v.require(quad < 0.0, "negative");
  return v;
}

inline Verdict ordering_and_collapse() {
  Verdict v;
  const auto dict = default_dictionary();
  ErgodicOptions eo;
  eo.with_discount = false;
  for (const auto& gspec : {kG, GFunction{1.0, 1.0}}) {
    const auto m = g_ou(0.5, gspec);
    const bool classical = gspec.classical();
    double worst_order = -1e9, worst_gap = 0.0;
    for (const auto& e : dict) {
      const double lb = invariant_value(m, e.f).lambda_bar;
      const double l = ergodic_value(m, e.f, eo).lambda;
      worst_order = std::max(worst_order, l - lb);
      v.expect(l <= lb + 1e-2, "%s%s: lambda %.4f > lambda_bar %.4f", classical ? "classical " : "",
                e.label.c_str(), l, lb);
      if (classical) {
        worst_gap = std::max(worst_gap, std::fabs(lb - l));
        v.expect(std::fabs(lb - l) <= 2e-2, "classical gap %s=%.2e", e.label.c_str(), lb - l);
      }
    }
    if (classical) {
      v.note("max classical gap %.1e", worst_gap);
      const double m2 = invariant_value(m, parse("x^2")).lambda_bar;
      const double m4 = invariant_value(m, parse("x^4")).lambda_bar;
      v.require(std::fabs(m2 - 1.0) <= 2e-2, "E[x^2]=%.4f", m2);
      v.require(std::fabs(m4 - 3.0) <= 2e-2, "E[x^4]=%.4f", m4);
    } else {
      v.note("max(lambda - lambda_bar)=%.1e", worst_order);
    }
  }
  return v;
}

inline Verdict invariance_identity() {
  Verdict v;
  const auto m = g_ou(0.5);
  double worst = 0.0;
  for (const auto& e : default_dictionary()) {
    const double base = invariant_value(m, e.f).lambda_bar;
    for (double t : {0.5, 1.0, 2.0}) {
      const double d = invariance_defect(m, e.f, t, {}, base);
      worst = std::max(worst, d);
      v.expect(d <= 2e-2, "%s t=%g defect %.2e", e.label.c_str(), t, d);
    }
  }
  v.note("max defect %.2e", worst);
  return v;
}

inline Verdict dirac_example() {
  Verdict v;
  const auto m = make_builtin("dirac", {}, kG);
  ErgodicOptions eo;
  eo.with_discount = false;
  double worst = 0.0;
  for (const auto& e : default_dictionary()) {
    const double f0 = e.f(0.0);
    const double lb = invariant_value(m, e.f).lambda_bar;
    const double l = ergodic_value(m, e.f, eo).lambda;
    worst = std::max({worst, std::fabs(lb - f0), std::fabs(l - f0)});
    v.expect(std::fabs(lb - f0) <= 1e-2 && std::fabs(l - f0) <= 1e-2,
              "%s: lambda_bar %.4f lambda %.4f f(0) %.4f", e.label.c_str(), lb, l, f0);
  }
  v.note("max |value - f(0)| %.1e", worst);
  return v;
}

inline Verdict mc_validation(unsigned long long seed) {
  Verdict v;
  const auto m = g_ou(0.5);
  SolveOptions so;
  so.slices.uniform = 200;

  McParams lbp;
  lbp.dt = 2e-3;
  lbp.n_paths = 20000;
  lbp.seed = seed;
  double worst_lb = -1e9;
  for (const auto& e : default_dictionary()) {
    const auto sol = solve(m, e.f, 1.0, Grid1D{}, std::nullopt, so);
    const double pde = sol.evaluate(1.0, 0.0);
    const std::vector<ControlPolicy> policies{ControlPolicy::constant(kG.sigma_lo_sq(), kG),
                                              ControlPolicy::constant(kG.sigma_hi_sq(), kG),
                                              bang_bang_policy(m, sol)};
    const auto lb = lower_bound(m, e.f, 0.0, 1.0, policies, lbp);
    const double se = lb.estimates[lb.best].std_error;
    worst_lb = std::max(worst_lb, lb.value - pde - 3.0 * se);
    v.expect(lb.value <= pde + 3.0 * se + 0.05, "lower bound %s: %.4f > pde %.4f", e.label.c_str(),
              lb.value, pde);
  }
  v.note("max(lb - pde - 3se)=%.3f", worst_lb);

  McParams bb;
  bb.dt = 1e-3;
  bb.n_paths = 100000;
  bb.seed = seed;
  for (const char* src : {"x^2", "-x^2", "x^4 - 3*x^2"}) {
    const Expr f = parse(src);
    const auto sol = solve(m, f, 1.0, Grid1D{}, std::nullopt, so);
    const double pde = sol.evaluate(1.0, 0.0);
    const auto est = simulate(m, bang_bang_policy(m, sol), 0.0, f, 1.0, bb);
    v.expect(std::fabs(est.mean - pde) <= 2e-2 + 3.0 * est.std_error,
              "bang-bang %s: mc %.4f+-%.4f pde %.4f", src, est.mean, est.std_error, pde);
  }

  McParams cp;
  cp.dt = 1e-6;
  cp.n_paths = 4;
  cp.seed = seed;
  const double rate = contraction_check(m, 2.0, -1.0, 1.0, cp);
  v.require(std::fabs(rate - 0.5) <= 1e-6, "contraction %.9f", rate);
  return v;
}

inline Verdict property_suites(unsigned long long seed) {
  Verdict v;
  std::mt19937_64 rng(seed);

  // G axioms on dyadic inputs, where every operation below is exact.
  {
    std::uniform_int_distribution<int> pick(-1 << 20, 1 << 20);
    auto dyadic = [&] { return std::ldexp(static_cast<double>(pick(rng)), -10); };
    const GFunction& g = kG;
    int bad = 0;
    for (int k = 0; k < 1000; ++k) {
      const double a = dyadic(), b = dyadic();
      const double lam = std::ldexp(1.0, pick(rng) % 8);
      const double hi = std::max(a, b), lo = std::min(a, b);
      bad += !(g(hi) >= g(lo));
      bad += !(g(a + b) <= g(a) + g(b));
      bad += !(g(lam * a) == lam * g(a));
      bad += !(std::fabs(g(a)) <= 0.5 * g.sigma_hi_sq() * std::fabs(a));
      bad += !(g(hi) - g(lo) >= 0.5 * g.sigma_lo_sq() * (hi - lo));
    }
    v.require(bad == 0, "gfunc axioms: %d violations in 1000 pairs", bad);
  }

  // Symbolic derivatives against central differences with step 1e-5. The
  // second derivative is compared with the difference quotient of the first.
  {
    double worst = 0.0;
    for (const auto& e : default_dictionary()) {
      if (!e.f.is_smooth()) continue;
      const Expr d1 = deriv(e.f, 1), d2 = deriv(e.f, 2);
      const double h = 1e-5;
      for (int i = 0; i < 50; ++i) {
        const double x = -5.0 + 10.0 * (i + 0.5) / 50.0;
        const double fd1 = (e.f(x + h) - e.f(x - h)) / (2 * h);
        const double fd2 = (d1(x + h) - d1(x - h)) / (2 * h);
        worst = std::max(worst, std::fabs(fd1 - d1(x)) / std::max(1.0, std::fabs(d1(x))));
        worst = std::max(worst, std::fabs(fd2 - d2(x)) / std::max(1.0, std::fabs(d2(x))));
      }
    }
    v.require(worst <= 1e-6, "derivative rel err %.1e", worst);
  }

  const auto m = g_ou(0.5);
  const Grid1D coarse{-8.0, 8.0, 321};
  const Marcher marcher(m, coarse);
  SolveOptions so;
  so.slices.uniform = 8;

  // Monotonicity: g = f + non-negative bump.
  {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const auto dict = default_dictionary();
    double worst = -1.0;
    for (int k = 0; k < 20; ++k) {
      const auto& base = dict[k % dict.size()];
      const double c = -4.0 + 8.0 * u01(rng), w = 0.2 + u01(rng), a = 2.0 * u01(rng);
      auto f = sample(base.f, coarse);
      auto g = f;
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double z = (coarse.x(i) - c) / w;
        g[i] += a * std::exp(-z * z);
      }
      const auto sf = solve(marcher, f, 1.0, {}, so.slices);
      const auto sg = solve(marcher, g, 1.0, {}, so.slices);
      for (std::size_t s = 0; s < sf.slice_count(); ++s)
        for (std::size_t i = 0; i < f.size(); ++i)
          worst = std::max(worst, sf.slice(s)[i] - sg.slice(s)[i]);
    }
    v.require(worst <= 1e-12, "monotonicity max(u_f - u_g)=%.1e", worst);
  }

  // Constant preservation and positive homogeneity (exact).
  {
    std::vector<double> c(coarse.size(), 3.0);
    marcher.advance(c, 1.0);
    bool exact = std::all_of(c.begin(), c.end(), [](double y) { return y == 3.0; });
    v.require(exact, "constant preserved");
    auto f = sample(parse("x^4 - 3*x^2"), coarse);
    for (double lam : {0.5, 2.0}) {
      auto a = f, b = f;
      for (double& y : b) y *= lam;
      marcher.advance(a, 1.0);
      marcher.advance(b, 1.0);
      bool same = true;
      for (std::size_t i = 0; i < a.size(); ++i) same = same && b[i] == lam * a[i];
      v.require(same, "homogeneity lambda=%g exact", lam);
    }
  }

  // Sub-additivity at x = 0, t = 1 on the default grid.
  {
    const auto dict = default_dictionary();
    const Marcher full(m, Grid1D{});
    std::vector<std::vector<double>> data, end;
    for (const auto& e : dict) {
      data.push_back(sample(e.f, full.grid()));
      end.push_back(data.back());
      full.advance(end.back(), 1.0);
    }
    const std::size_t mid = full.grid().size() / 2;
    double worst = -1e9;
    for (std::size_t i = 0; i < dict.size(); ++i)
      for (std::size_t j = i + 1; j < dict.size(); ++j) {
        auto s = data[i];
        for (std::size_t k = 0; k < s.size(); ++k) s[k] += data[j][k];
        full.advance(s, 1.0);
        worst = std::max(worst, s[mid] - end[i][mid] - end[j][mid]);
      }
    v.require(worst <= 5e-3, "sub-additivity max excess %.1e", worst);
  }

  // Domain doubling: [-16, 16] with the same dx agrees at x = 0.
  {
    double worst = 0.0;
    const Grid1D base{};
    const Grid1D wide = widen(base, 2);
    for (const auto& e : default_dictionary()) {
      const double a = solve(m, e.f, 2.0, base).evaluate(2.0, 0.0);
      const double b = solve(m, e.f, 2.0, wide).evaluate(2.0, 0.0);
      worst = std::max(worst, std::fabs(a - b));
    }
    const double ia = invariant_value(m, parse("x^4 - 3*x^2")).lambda_bar;
    InvariantOptions wo;
    wo.grid = wide;
    const double ib = invariant_value(m, parse("x^4 - 3*x^2"), wo).lambda_bar;
    worst = std::max(worst, std::fabs(ia - ib));
    v.require(worst <= 1e-3, "R-doubling max diff %.1e", worst);
  }

  // Grid halving: successive changes of u(1, 0) shrink by at least half.
  {
    int bad = 0;
    double worst_ratio = 0.0;
    for (const auto& e : default_dictionary()) {
      Grid1D g{-8.0, 8.0, 801};
      double prev = solve(m, e.f, 1.0, g).evaluate(1.0, 0.0);
      double prev_change = std::numeric_limits<double>::quiet_NaN();
      for (int level = 0; level < 2; ++level) {
        g = refine(g);
        const double cur = solve(m, e.f, 1.0, g).evaluate(1.0, 0.0);
        const double change = std::fabs(cur - prev);
        if (std::isfinite(prev_change) && change > 1e-9) {
          const double ratio = change / prev_change;
          worst_ratio = std::max(worst_ratio, ratio);
          if (ratio > 0.5) ++bad;
        }
        prev = cur;
        prev_change = change;
      }
    }
    v.require(bad == 0, "grid halving worst ratio %.3f", worst_ratio);
  }
  return v;
}

inline Verdict bracket_drift_example() {
  Verdict v;
  const double mean = 2.0;
  const auto m = make_builtin("gou_bracket", {mean}, kG);
  const GDiffusionModel aux{"aux", Expr::constant(0.0), Expr::constant(1.0),
                            Expr::constant(std::sqrt(0.5)), kG, 2};
  for (const char* src : {"x", "x^2"}) {
    const Expr f = parse(src);
    const double limit = invariant_value(m, f).lambda_bar;
    Bindings shift{{"m", mean}};
    const Expr shifted = parse(std::string(src) == "x" ? "m + x" : "(m + x)^2", shift);
    const double rhs = solve(aux, shifted, 1.0).evaluate(1.0, 0.0);
    v.require(std::fabs(limit - rhs) <= 2e-2, "%s: limit %.5f vs %.5f", src, limit, rhs);
  }
  return v;
}

struct Check {
  int id;
  const char* name;
  std::function<Verdict(unsigned long long)> run;
};

inline std::vector<Check> all() {
  return {
      {1, "g-normal moments", [](auto) { return gnormal_moments(); }},
      {2, "G-OU marginal law", [](auto) { return ou_marginal_law(); }},
      {3, "G-OU invariant values", [](auto) { return ou_invariant_values(); }},
      {4, "convergence rate", [](auto) { return convergence_rate(); }},
      {5, "ergodic value zero", [](auto) { return ergodic_zero(); }},
      {6, "strict gap", [](auto) { return strict_gap(); }},
      {7, "ergodic PDE solutions", [](auto) { return ergodic_pde_solutions(); }},
      {8, "ordering and classical collapse", [](auto) { return ordering_and_collapse(); }},
      {9, "invariance identity", [](auto) { return invariance_identity(); }},
      {10, "dirac example", [](auto) { return dirac_example(); }},
      {11, "Monte Carlo validation", [](auto s) { return mc_validation(s); }},
      {12, "property suites", [](auto s) { return property_suites(s); }},
      {13, "<B>-drift example", [](auto) { return bracket_drift_example(); }},
  };
}

}  // namespace checks

/// Runs the selected checks (all when `only` is empty). Exceptions inside a
/// check turn it into a FAIL carrying the message.
inline std::vector<CheckResult> run_checks(const std::set<int>& only = {},
                                           unsigned long long seed = 20240601,
                                           std::ostream* progress = nullptr) {
  std::vector<CheckResult> out;
  for (const auto& c : checks::all()) {
    if (!only.empty() && !only.count(c.id)) continue;
    CheckResult r;
    r.id = c.id;
    r.name = c.name;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const auto v = c.run(seed);
      r.passed = v.ok();
      r.detail = v.detail();
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (progress) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "%s %2d %-32s %7.1fs  ", r.passed ? "PASS" : "FAIL", r.id,
                    r.name.c_str(), r.seconds);
      *progress << buf << r.detail << std::endl;
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace ergo
