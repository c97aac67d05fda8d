#pragma once

// The invariant functional f -> lambda_bar^f and the ergodic functional
// f -> lambda^f as computable maps on a dictionary of test functions.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ergo/error.hpp"
#include "ergo/expr.hpp"
#include "ergo/longtime.hpp"
#include "ergo/model.hpp"
#include "ergo/pde.hpp"

namespace ergo {

struct TestFunction {
  std::string label;
  Expr f;
  int p = 1;  // growth order: f in C_{2p,Lip}
};

inline std::vector<TestFunction> default_dictionary() {
  auto entry = [](const char* src, int p) { return TestFunction{src, parse(src), p}; };
  return {
      entry("3", 1),
      entry("x", 1),
      entry("x^2", 1),
      entry("-x^2", 1),
      entry("abs(x)", 1),
      entry("x^4 - 3*x^2", 2),
      entry("max(0, 1 - x^2)", 1),
      entry("exp(-x)*x^2", 2),
  };
}

struct MeasureOptions {
  InvariantOptions invariant;
  ErgodicOptions ergodic;
};

struct Comparison {
  double lambda_bar = 0.0;
  double lambda = 0.0;
  double gap = 0.0;  // lambda_bar - lambda, >= 0 up to solver tolerance
  InvariantResult invariant;
  ErgodicResult ergodic;
};

inline Comparison compare(const GDiffusionModel& model, const std::vector<double>& f_grid,
                          const MeasureOptions& opts = {}) {
  Comparison c;
  c.invariant = invariant_value(model, f_grid, opts.invariant);
  c.ergodic = ergodic_value(model, f_grid, opts.ergodic);
  c.lambda_bar = c.invariant.lambda_bar;
  c.lambda = c.ergodic.lambda;
  c.gap = c.lambda_bar - c.lambda;
  return c;
}

inline Comparison compare(const GDiffusionModel& model, const Expr& f,
                          const MeasureOptions& opts = {}) {
  return compare(model, sample(f, opts.invariant.grid), opts);
}

/// |lambda_bar^{fbar} - lambda_bar^f| where fbar(x) = E^[f(X_t^x)] is taken
/// from one solve on the grid. An invariant functional makes this vanish.
inline double invariance_defect(const GDiffusionModel& model, const Expr& f, double t,
                                const InvariantOptions& opts = {},
                                std::optional<double> lambda_bar_f = std::nullopt) {
  if (!(t > 0.0)) throw Error("invariance_defect: t must be positive");
  Marcher marcher(model, opts.grid, opts.march);
  auto u = sample(f, marcher.grid());
  if (!lambda_bar_f) lambda_bar_f = invariant_value(model, u, opts).lambda_bar;
  marcher.advance(u, t);
  const double lambda_bar_fbar = invariant_value(model, std::move(u), opts).lambda_bar;
  return std::fabs(lambda_bar_fbar - *lambda_bar_f);
}

struct ReportEntry {
  std::string label;
  double lambda_bar = 0.0;
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double gap = std::numeric_limits<double>::quiet_NaN();
};

struct FunctionalReport {
  std::vector<ReportEntry> entries;
  std::vector<std::string> sublinearity_violations;
  std::vector<std::string> ordering_violations;
  int checks = 0;

  bool passed() const { return sublinearity_violations.empty() && ordering_violations.empty(); }
};

struct ReportOptions {
  MeasureOptions measure;
  double sublinear_tol = 2e-2;     // sub-additivity and homogeneity
  double monotone_tol = 2e-3;      // two limits extracted at their own horizons
  double constant_tol = 1e-9;
  double ordering_tol = 1e-2;
  std::vector<double> scales{0.5, 2.0};
  bool ergodic = true;  // also check the ergodic functional (needs non-degenerate G)
};

/// Checks monotonicity, constant preservation, sub-additivity and positive
/// homogeneity of both functionals over all pairs of the dictionary, plus
/// the ordering lambda <= lambda_bar. Violations are recorded, not thrown.
inline FunctionalReport sublinearity_report(const GDiffusionModel& model,
                                            const std::vector<TestFunction>& dict,
                                            const ReportOptions& opts = {}) {
  if (dict.empty()) throw Error("sublinearity_report: empty dictionary");
  const Grid1D& grid = opts.measure.invariant.grid;
  const bool with_ergodic = opts.ergodic && model.g.nondegenerate();
  ErgodicOptions eo = opts.measure.ergodic;
  eo.with_discount = false;

  struct Functional {
    const char* name;
    std::function<double(const std::vector<double>&)> eval;
  };
  std::vector<Functional> functionals;
  functionals.push_back({"invariant", [&](const std::vector<double>& f) {
                           return invariant_value(model, f, opts.measure.invariant).lambda_bar;
                         }});
  if (with_ergodic)
    functionals.push_back(
        {"ergodic", [&](const std::vector<double>& f) { return ergodic_value(model, f, eo).lambda; }});

  const std::size_t n = dict.size();
  std::vector<std::vector<double>> sampled(n);
  for (std::size_t i = 0; i < n; ++i) sampled[i] = sample(dict[i].f, grid);

  FunctionalReport report;
  std::vector<std::vector<double>> values(functionals.size(), std::vector<double>(n));
  for (std::size_t k = 0; k < functionals.size(); ++k)
    for (std::size_t i = 0; i < n; ++i) values[k][i] = functionals[k].eval(sampled[i]);

  char buf[256];
  auto violation = [&](const char* fmt, auto... args) {
    std::snprintf(buf, sizeof buf, fmt, args...);
    report.sublinearity_violations.emplace_back(buf);
  };

  for (std::size_t k = 0; k < functionals.size(); ++k) {
    const char* name = functionals[k].name;
    const auto& v = values[k];
    for (std::size_t i = 0; i < n; ++i) {
      if (dict[i].f.is_constant()) {
        ++report.checks;
        const double c = dict[i].f.root().value;
        if (std::fabs(v[i] - c) > opts.constant_tol)
          violation("%s: constant %s maps to %.10g", name, dict[i].label.c_str(), v[i]);
      }
      for (double s : opts.scales) {
        ++report.checks;
        std::vector<double> scaled = sampled[i];
        for (double& y : scaled) y *= s;
        const double lhs = functionals[k].eval(scaled);
        if (std::fabs(lhs - s * v[i]) > opts.sublinear_tol)
          violation("%s: homogeneity fails for %g*(%s): %.6g vs %.6g", name, s,
                    dict[i].label.c_str(), lhs, s * v[i]);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        std::vector<double> sum(grid.size());
        bool i_le_j = true, j_le_i = true;
        for (std::size_t m = 0; m < sum.size(); ++m) {
          sum[m] = sampled[i][m] + sampled[j][m];
          i_le_j = i_le_j && sampled[i][m] <= sampled[j][m];
          j_le_i = j_le_i && sampled[j][m] <= sampled[i][m];
        }
        ++report.checks;
        const double lhs = functionals[k].eval(sum);
        if (lhs > v[i] + v[j] + opts.sublinear_tol)
          violation("%s: sub-additivity fails for (%s) + (%s): %.6g > %.6g", name,
                    dict[i].label.c_str(), dict[j].label.c_str(), lhs, v[i] + v[j]);
        if (i_le_j) {
          ++report.checks;
          if (v[i] > v[j] + opts.monotone_tol)
            violation("%s: monotonicity fails, %s <= %s but %.6g > %.6g", name,
                      dict[i].label.c_str(), dict[j].label.c_str(), v[i], v[j]);
        }
        if (j_le_i) {
          ++report.checks;
          if (v[j] > v[i] + opts.monotone_tol)
            violation("%s: monotonicity fails, %s <= %s but %.6g > %.6g", name,
                      dict[j].label.c_str(), dict[i].label.c_str(), v[j], v[i]);
        }
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    ReportEntry e{dict[i].label, values[0][i]};
    if (with_ergodic) {
      e.lambda = values[1][i];
      e.gap = e.lambda_bar - e.lambda;
      ++report.checks;
      if (e.lambda > e.lambda_bar + opts.ordering_tol) {
        std::snprintf(buf, sizeof buf, "ordering fails for %s: lambda %.6g > lambda_bar %.6g",
                      e.label.c_str(), e.lambda, e.lambda_bar);
        report.ordering_violations.emplace_back(buf);
      }
    }
    report.entries.push_back(std::move(e));
  }
  return report;
}

/// CSV with columns entry,lambda_bar,lambda,gap.
inline void write_report_csv(const std::vector<ReportEntry>& entries, std::ostream& os) {
  os << "entry,lambda_bar,lambda,gap\n";
  char buf[256];
  for (const auto& e : entries) {
    std::snprintf(buf, sizeof buf, "\"%s\",%.17g,%.17g,%.17g\n", e.label.c_str(), e.lambda_bar,
                  e.lambda, e.gap);
    os << buf;
  }
}

// ---------------------------------------------------------------------------
// Explicit lower bound for the invariant value of x^4 - 3x^2 on G-OU(1/2)
// with sigma_hi_sq = 1.

struct GapBound {
  double sigma_lo_sq = 0.0;
  double threshold = 0.0;    // sqrt(1 - lo)/2: g2 is the larger branch inside |x| <= threshold
  double bound_value = 0.0;  // E_1[(g1 v g2)(B_{1/2})]
  double floor_value = 0.0;  // (9/16)(1 - lo)^2 P(|B_{1/2}| <= sqrt(1 - lo)/4)
};

/// g1(x) = x^4 - 3/4: conditional value of x^4 - 3x^2 after half a unit of
/// time at unit variance.
inline double gap_branch_hi(double x) { return x * x * x * x - 0.75; }

/// g2(x) = x^4 + 3(lo - 1)x^2 + (3/4)lo^2 - (3/2)lo: same at variance lo.
inline double gap_branch_lo(double x, double lo) {
  return x * x * x * x + 3.0 * (lo - 1.0) * x * x + 0.75 * lo * lo - 1.5 * lo;
}

inline GapBound gap_lower_bound(double sigma_lo_sq) {
  if (!(sigma_lo_sq > 0.0 && sigma_lo_sq <= 1.0))
    throw Error("gap_lower_bound: need 0 < sigma_lo_sq <= 1");
  GapBound gb;
  gb.sigma_lo_sq = sigma_lo_sq;
  const double spread = 1.0 - sigma_lo_sq;
  gb.threshold = std::sqrt(spread) / 2.0;

  // Density of N(0, 1/2).
  auto density = [](double y) { return std::exp(-y * y) / std::sqrt(std::numbers::pi); };
  auto integrand = [&](double y) {
    return std::max(gap_branch_hi(y), gap_branch_lo(y, sigma_lo_sq)) * density(y);
  };
  using boost::math::quadrature::gauss_kronrod;
  constexpr unsigned kPoints = 61;
  constexpr unsigned kDepth = 20;
  const double inf = std::numeric_limits<double>::infinity();
  double error = 0.0, total = 0.0;
  auto piece = [&](double a, double b) {
    if (!(b > a)) return;
    double e = 0.0;
    total += gauss_kronrod<double, kPoints>::integrate(integrand, a, b, kDepth, 1e-13, &e);
    error += e;
  };
  // Split at the kinks of the pointwise max.
  piece(-inf, -gb.threshold);
  piece(-gb.threshold, gb.threshold);
  piece(gb.threshold, inf);
  if (!std::isfinite(total) || error > 1e-9)
    throw ConvergenceError("gap_lower_bound: quadrature did not converge", error);
  gb.bound_value = total;

  // P(|N(0, 1/2)| <= a) = erf(a).
  const double a = std::sqrt(spread) / 4.0;
  gb.floor_value = 9.0 / 16.0 * spread * spread * std::erf(a);
  return gb;
}

}  // namespace ergo
