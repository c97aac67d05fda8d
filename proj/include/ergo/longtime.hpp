#pragma once

// Long-time limits of the nonlinear semigroup.
//
//   invariant value  lambda_bar^f = lim_t  E^[f(X_t^x)]               (u(t, x) as t -> oo)
//   ergodic value    lambda^f     = lim_T  E^[int_0^T f(X_s^x) ds] / T
//
// The ergodic value comes from two independent routes: the slope of the
// running-cost solution w(t) and the vanishing-discount limit rho v_rho.

#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ergo/error.hpp"
#include "ergo/expr.hpp"
#include "ergo/model.hpp"
#include "ergo/pde.hpp"

namespace ergo {

struct InvariantOptions {
  Grid1D grid;
  MarchOptions march;
  double x_ref = 0.0;
  double tol = 1e-3;          // max |u(T, x) - u(T/2, x)| over x_ref and the probes
  double t_initial = 4.0;
  double t_max = 256.0;
  double min_horizon = 0.0;   // keep marching at least this long
  double trace_dt = 1.0 / 32.0;
  double rate_floor = 1e-5;   // ignore |u - lambda_bar| below this when fitting the rate
  std::vector<double> probes{-2.0, -1.0, 0.0, 1.0, 2.0};
  bool allow_non_dissipative = false;
};

struct TracePoint {
  double t;
  double value;
};

struct InvariantResult {
  double lambda_bar = 0.0;
  double rate_estimate = 0.0;  // +inf when u(., x_ref) reaches its limit too fast to fit
  double x_dependence_defect = 0.0;       // max over probes of |u(T, x) - lambda_bar|
  double x_dependence_defect_half = 0.0;  // same at T/2
  double horizon = 0.0;
  double convergence_defect = 0.0;  // max |u(T, x) - u(T/2, x)| over x_ref and probes
  double cesaro_mean = 0.0;         // (1/T) int_0^T u(t, x_ref) dt, trapezoid on the trace
  double eta_estimate = 0.0;
  std::vector<TracePoint> trace;
  std::vector<std::string> warnings;
};

struct ErgodicOptions {
  Grid1D grid;
  MarchOptions march;
  double x_ref = 0.0;
  double tol = 1e-3;  // change of the slope estimate between horizons
  double t_initial = 4.0;
  double t_max = 256.0;
  bool with_discount = true;
  std::vector<double> discounts{0.05, 0.025};
  double discount_tol = 1e-5;  // change of rho v_rho(x_ref) over one time unit
  double discount_t_max = 400.0;
};

struct ErgodicResult {
  double lambda = 0.0;  // = lambda_time_avg
  double lambda_time_avg = 0.0;
  double lambda_discount = std::numeric_limits<double>::quiet_NaN();
  double method_disagreement = std::numeric_limits<double>::quiet_NaN();
  double horizon = 0.0;  // slope taken over [T, 2T]
  double convergence_defect = 0.0;
  std::vector<double> discount_values;  // rho v_rho(x_ref), one per discount
  std::vector<double> profile;          // relative discounted profile at the smallest rho
  std::vector<TracePoint> slope_trace;  // (T, slope estimate)
};

namespace detail {

inline double interpolate(const Grid1D& grid, std::span<const double> v, double x) {
  if (!(x >= grid.x_min && x <= grid.x_max))
    throw Error("reference point " + std::to_string(x) + " outside the solver domain");
  const double s = (x - grid.x_min) / grid.dx();
  auto i = static_cast<std::size_t>(std::clamp(std::floor(s), 0.0, double(grid.nx - 2)));
  const double w = std::clamp(s - static_cast<double>(i), 0.0, 1.0);
  if (w == 0.0) return v[i];
  return (1.0 - w) * v[i] + w * v[i + 1];
}

/// Least-squares decay rate of log|value - limit| against t.
inline double fit_rate(std::span<const TracePoint> trace, double limit, double t_from, double t_to,
                       double floor) {
  double n = 0, st = 0, sy = 0, stt = 0, sty = 0;
  for (const auto& p : trace) {
    if (p.t < t_from || p.t > t_to) continue;
    const double d = std::fabs(p.value - limit);
    if (!(d > floor)) continue;
    const double y = std::log(d);
    n += 1;
    st += p.t;
    sy += y;
    stt += p.t * p.t;
    sty += p.t * y;
  }
  if (n < 3) return std::numeric_limits<double>::infinity();
  const double denom = n * stt - st * st;
  if (denom <= 0.0) return std::numeric_limits<double>::infinity();
  return -(n * sty - st * sy) / denom;
}

inline void check_dissipative(const GDiffusionModel& model, const Grid1D& grid, bool allow,
                              double& eta, std::vector<std::string>& warnings) {
  eta = estimate_h2_eta(model, Interval{grid.x_min, grid.x_max}, 101).eta_estimate;
  if (eta > 0.0) return;
  const std::string msg =
      "dissipativity margin eta = " + std::to_string(eta) + " <= 0 on the probe set";
  if (!allow) throw ModelError(msg + "; long-time limits may not exist");
  warnings.push_back(msg);
}

}  // namespace detail

/// lambda_bar^f for grid-sampled initial data. The horizon T doubles from
/// t_initial until u(T, .) and u(T/2, .) agree within tol at x_ref and at
/// every probe point.
inline InvariantResult invariant_value(const GDiffusionModel& model, std::vector<double> u,
                                       const InvariantOptions& opts = {}) {
  InvariantResult res;
  detail::check_dissipative(model, opts.grid, opts.allow_non_dissipative, res.eta_estimate,
                            res.warnings);
  Marcher marcher(model, opts.grid, opts.march);
  const Grid1D& grid = marcher.grid();
  if (u.size() != grid.size()) throw Error("invariant_value: data size does not match grid");

  auto at = [&](double x) { return detail::interpolate(grid, u, x); };
  auto probe_defect = [&](double limit) {
    double d = 0.0;
    for (double x : opts.probes) d = std::max(d, std::fabs(at(x) - limit));
    return d;
  };

  double t = 0.0;
  res.trace.push_back({0.0, at(opts.x_ref)});
  auto march_to = [&](double target) {
    while (t < target - 1e-12) {
      const double next = std::min(target, t + opts.trace_dt);
      marcher.advance(u, next - t);
      t = next;
      res.trace.push_back({t, at(opts.x_ref)});
    }
  };

  // Change between horizons, measured at x_ref and at every probe.
  auto horizon_defect = [&](std::span<const double> half) {
    double d = std::fabs(at(opts.x_ref) - detail::interpolate(grid, half, opts.x_ref));
    for (double x : opts.probes)
      d = std::max(d, std::fabs(at(x) - detail::interpolate(grid, half, x)));
    return d;
  };

  double horizon = opts.t_initial;
  march_to(horizon / 2);
  std::vector<double> half_slice = u;
  for (;;) {
    march_to(horizon);
    res.convergence_defect = horizon_defect(half_slice);
    if (res.convergence_defect <= opts.tol && horizon >= opts.min_horizon) break;
    if (horizon * 2 > opts.t_max)
      throw ConvergenceError("invariant value did not settle by T = " + std::to_string(horizon),
                             res.convergence_defect);
    half_slice = u;
    horizon *= 2;
  }

  res.horizon = horizon;
  res.lambda_bar = at(opts.x_ref);
  res.x_dependence_defect = probe_defect(res.lambda_bar);
  {
    std::swap(u, half_slice);
    res.x_dependence_defect_half = probe_defect(res.lambda_bar);
    std::swap(u, half_slice);
  }
  res.rate_estimate =
      detail::fit_rate(res.trace, res.lambda_bar, horizon / 10, horizon, opts.rate_floor);
  double integral = 0.0;
  for (std::size_t k = 1; k < res.trace.size(); ++k)
    integral += 0.5 * (res.trace[k].t - res.trace[k - 1].t) *
                (res.trace[k].value + res.trace[k - 1].value);
  res.cesaro_mean = integral / horizon;
  return res;
}

inline InvariantResult invariant_value(const GDiffusionModel& model, const Expr& f,
                                       const InvariantOptions& opts = {}) {
  Grid1D g = opts.grid;
  g.validate();
  return invariant_value(model, sample(f, g), opts);
}

/// Trace CSV with columns t,value,defect (defect = |value - lambda_bar|).
inline void write_trace_csv(const InvariantResult& r, std::ostream& os) {
  os << "t,value,defect\n";
  char buf[96];
  for (const auto& p : r.trace) {
    std::snprintf(buf, sizeof buf, "%.10g,%.17g,%.6g\n", p.t, p.value,
                  std::fabs(p.value - r.lambda_bar));
    os << buf;
  }
}

namespace detail {

/// rho v_rho(x_ref) for the discounted stationary equation
///   Op(v) + f - rho v = 0,
/// reached by marching the recentred profile psi = v - v(x_ref): each step is
/// a discounted explicit step followed by subtracting psi(x_ref). The shift
/// per unit time converges to rho v_rho(x_ref).
inline double discounted_value(const GDiffusionModel& model, std::span<const double> source,
                               double rho, const ErgodicOptions& opts,
                               std::vector<double>* profile) {
  MarchOptions mo = opts.march;
  mo.discount = rho;
  Marcher marcher(model, opts.grid, mo);
  const Grid1D& grid = marcher.grid();
  std::vector<double> psi(grid.size(), 0.0), next(grid.size());
  const double dt = marcher.dt();
  const auto steps_per_unit = static_cast<long>(std::ceil(1.0 / dt));
  const double h = 1.0 / static_cast<double>(steps_per_unit);
  double kappa = 0.0;
  double previous = std::numeric_limits<double>::quiet_NaN();
  for (double t = 0.0;;) {
    for (long s = 0; s < steps_per_unit; ++s) {
      marcher.step(psi, next, source, h);
      const double shift = interpolate(grid, next, opts.x_ref);
      for (std::size_t i = 0; i < next.size(); ++i) next[i] -= shift;
      kappa = shift / h;
      psi.swap(next);
    }
    t += 1.0;
    if (!std::isfinite(kappa)) throw NumericError("discounted solve produced a non-finite value");
    if (t >= 2.0 && std::fabs(kappa - previous) <= opts.discount_tol) break;
    if (t >= opts.discount_t_max)
      throw ConvergenceError("discounted solve (rho = " + std::to_string(rho) +
                                 ") did not reach steady state",
                             std::fabs(kappa - previous));
    previous = kappa;
  }
  if (profile) *profile = std::move(psi);
  return kappa;
}

}  // namespace detail

/// lambda^f for a grid-sampled running cost. Requires a non-degenerate G.
inline ErgodicResult ergodic_value(const GDiffusionModel& model, std::span<const double> source,
                                   const ErgodicOptions& opts = {}) {
  if (!model.g.nondegenerate())
    throw ModelError("ergodic value needs a non-degenerate G (sigma_lo_sq > 0)");
  Marcher marcher(model, opts.grid, opts.march);
  const Grid1D& grid = marcher.grid();
  if (source.size() != grid.size()) throw Error("ergodic_value: source size does not match grid");

  ErgodicResult res;
  std::vector<double> w(grid.size(), 0.0);
  double t = 0.0;
  double horizon = opts.t_initial;
  marcher.advance(w, horizon, source);
  t = horizon;
  double w_at_horizon = detail::interpolate(grid, w, opts.x_ref);
  double previous_slope = std::numeric_limits<double>::quiet_NaN();
  for (;;) {
    marcher.advance(w, horizon, source);
    t += horizon;
    const double w_at_double = detail::interpolate(grid, w, opts.x_ref);
    const double slope = (w_at_double - w_at_horizon) / horizon;
    res.slope_trace.push_back({horizon, slope});
    if (std::isfinite(previous_slope)) {
      res.convergence_defect = std::fabs(slope - previous_slope);
      if (res.convergence_defect <= opts.tol) {
        res.lambda_time_avg = slope;
        break;
      }
    }
    if (2 * t > opts.t_max)
      throw ConvergenceError("time-average slope did not settle by T = " + std::to_string(horizon),
                             std::isfinite(previous_slope) ? std::fabs(slope - previous_slope)
                                                           : std::fabs(slope));
    previous_slope = slope;
    w_at_horizon = w_at_double;
    horizon = t;
  }
  res.horizon = horizon;
  res.lambda = res.lambda_time_avg;

  if (opts.with_discount && !opts.discounts.empty()) {
    for (std::size_t k = 0; k < opts.discounts.size(); ++k) {
      const bool last = k + 1 == opts.discounts.size();
      res.discount_values.push_back(detail::discounted_value(
          model, source, opts.discounts[k], opts, last ? &res.profile : nullptr));
    }
    if (res.discount_values.size() == 1) {
      res.lambda_discount = res.discount_values[0];
    } else {
      // Linear extrapolation to rho = 0 through the last two discounts.
      const std::size_t n = res.discount_values.size();
      const double r1 = opts.discounts[n - 2], r2 = opts.discounts[n - 1];
      const double k1 = res.discount_values[n - 2], k2 = res.discount_values[n - 1];
      res.lambda_discount = (r1 * k2 - r2 * k1) / (r1 - r2);
    }
    res.method_disagreement = std::fabs(res.lambda_time_avg - res.lambda_discount);
  }
  return res;
}

inline ErgodicResult ergodic_value(const GDiffusionModel& model, const Expr& f,
                                   const ErgodicOptions& opts = {}) {
  Grid1D g = opts.grid;
  g.validate();
  const auto src = sample(f, g);
  return ergodic_value(model, src, opts);
}

/// f(x) = -G(sigma^2 v'' + 2 h v') - b v', sampled on the grid. For smooth v
/// this running cost has ergodic value zero.
inline std::vector<double> ergodic_residual_source(const GDiffusionModel& model, const Expr& v,
                                                   const Grid1D& grid) {
  const Expr dv = deriv(v, 1);
  const Expr d2v = deriv(v, 2);
  std::vector<double> f(grid.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double x = grid.x(i);
    const double s = model.sigma(x);
    const double vx = dv(x);
    f[i] = -model.g(s * s * d2v(x) + 2.0 * model.h(x) * vx) - model.b(x) * vx;
  }
  return f;
}

inline double ergodic_residual(const GDiffusionModel& model, const Expr& v,
                               const ErgodicOptions& opts = {}) {
  if (!model.g.nondegenerate())
    throw ModelError("ergodic residual needs a non-degenerate G (sigma_lo_sq > 0)");
  Grid1D g = opts.grid;
  g.validate();
  const auto f = ergodic_residual_source(model, v, g);
  return ergodic_value(model, f, opts).lambda;
}

}  // namespace ergo
