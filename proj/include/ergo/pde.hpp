#pragma once

// Explicit monotone finite differences for
//
//   u_t = G(sigma(x)^2 u_xx + 2 h(x) u_x) + b(x) u_x + f0(x) - rho u,   u(0, .) = f.
//
// G is linear in its argument on each side of zero, so the sup over the
// variance c in [lo, hi] is attained at an endpoint. Each step takes the max
// of two linear monotone stencils, one per endpoint c, with the combined
// drift c h + b discretized per candidate. Ghost values outside the grid
// come from linear extrapolation (zero second difference at the boundary).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ergo/error.hpp"
#include "ergo/expr.hpp"
#include "ergo/gfunc.hpp"
#include "ergo/model.hpp"

namespace ergo {

struct Grid1D {
  double x_min = -8.0;
  double x_max = 8.0;
  int nx = 1601;
  double dt = 0.0;  // 0: chosen from the CFL bound

  double dx() const noexcept { return (x_max - x_min) / static_cast<double>(nx - 1); }
  double x(std::size_t i) const noexcept {
    return x_min + (x_max - x_min) * static_cast<double>(i) / static_cast<double>(nx - 1);
  }
  std::size_t size() const noexcept { return static_cast<std::size_t>(nx); }

  void validate() const {
    if (!(x_min < x_max)) throw Error("grid: x_min must be < x_max");
    if (nx < 3) throw Error("grid: nx must be >= 3");
    if (dt < 0.0) throw Error("grid: dt must be >= 0");
  }
};

/// Same node spacing, domain scaled by `factor` around the midpoint.
inline Grid1D widen(const Grid1D& g, int factor) {
  Grid1D w = g;
  const double mid = 0.5 * (g.x_min + g.x_max);
  w.x_min = mid + factor * (g.x_min - mid);
  w.x_max = mid + factor * (g.x_max - mid);
  w.nx = factor * (g.nx - 1) + 1;
  return w;
}

/// Halve dx on the same domain (dt is re-derived from the CFL bound).
inline Grid1D refine(const Grid1D& g) {
  Grid1D r = g;
  r.nx = 2 * (g.nx - 1) + 1;
  r.dt = 0.0;
  return r;
}

enum class Differencing {
  upwind,  // one-sided drift differences
  hybrid,  // central drift differences wherever the stencil stays monotone, upwind elsewhere
};

struct MarchOptions {
  double discount = 0.0;  // rho >= 0
  Differencing differencing = Differencing::hybrid;
  double cfl_fraction = 0.9;
  double max_dt = 0.05;  // cap when the CFL bound is infinite or huge
};

inline std::vector<double> sample(const Expr& f, const Grid1D& grid) {
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(grid.x(i));
  return out;
}

/// Largest dt keeping dt (c s^2/dx^2 + |c h + b|/dx) <= 1 at every node for
/// both variance endpoints.
inline double cfl_bound(const GDiffusionModel& m, const Grid1D& grid) {
  const double dx = grid.dx();
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid.x(i);
    const double b = m.b(x), h = m.h(x), s = m.sigma(x);
    for (double c : {m.g.sigma_lo_sq(), m.g.sigma_hi_sq()})
      worst = std::max(worst, c * s * s / (dx * dx) + std::fabs(c * h + b) / dx);
  }
  return worst > 0.0 ? 1.0 / worst : std::numeric_limits<double>::infinity();
}

/// Time-marching engine for one model on one grid. Holds the per-node stencil
/// coefficients; stepping is a pure function of its inputs.
class Marcher {
 public:
  Marcher(const GDiffusionModel& model, const Grid1D& grid, const MarchOptions& opts = {})
      : model_(model), grid_(grid), opts_(opts) {
    grid_.validate();
    if (opts.discount < 0.0) throw Error("discount must be >= 0");
    const std::size_t n = grid_.size();
    const double dx = grid_.dx();
    const double bound = cfl_bound(model, grid_);
    if (grid_.dt > 0.0) {
      if (grid_.dt > bound * (1.0 + 1e-12)) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "dt = %.6g violates the monotonicity bound %.6g on this grid (dx = %.6g)",
                      grid_.dt, bound, dx);
        throw CflError(buf);
      }
      dt_ = grid_.dt;
    } else {
      dt_ = std::min(opts.cfl_fraction * bound, opts.max_dt);
    }
    grid_.dt = dt_;

    for (int k = 0; k < 2; ++k) {
      up_[k].resize(n);
      dn_[k].resize(n);
    }
    const double cs[2] = {model.g.sigma_lo_sq(), model.g.sigma_hi_sq()};
    for (std::size_t i = 0; i < n; ++i) {
      const double x = grid_.x(i);
      const double b = model.b(x), h = model.h(x), s = model.sigma(x);
      if (!std::isfinite(b) || !std::isfinite(h) || !std::isfinite(s))
        throw NumericError("non-finite coefficient at x = " + std::to_string(x));
      for (int k = 0; k < 2; ++k) {
        const double diff = 0.5 * cs[k] * s * s / (dx * dx);
        const double drift = cs[k] * h + b;
        double up = diff + std::max(drift, 0.0) / dx;
        double dn = diff + std::max(-drift, 0.0) / dx;
        if (opts.differencing == Differencing::hybrid) {
          const double half = 0.5 * drift / dx;
          if (diff - std::fabs(half) >= 0.0) {
            up = diff + half;
            dn = diff - half;
          }
        }
        up_[k][i] = up;
        dn_[k][i] = dn;
      }
    }
  }

  const Grid1D& grid() const noexcept { return grid_; }
  const GDiffusionModel& model() const noexcept { return model_; }
  double dt() const noexcept { return dt_; }
  double discount() const noexcept { return opts_.discount; }

  /// Discrete generator: max over c of the linear stencil at every node.
  void apply_operator(std::span<const double> u, std::span<double> out) const {
    const std::size_t n = u.size();
    const double* a0 = up_[0].data();
    const double* d0 = dn_[0].data();
    const double* a1 = up_[1].data();
    const double* d1 = dn_[1].data();
    // Boundary: ghost from linear extrapolation, so u[-1] - u[0] = -(u[1] - u[0]).
    {
      const double dp = u[1] - u[0];
      out[0] = std::max((a0[0] - d0[0]) * dp, (a1[0] - d1[0]) * dp);
      const double dm = u[n - 2] - u[n - 1];
      out[n - 1] = std::max((d0[n - 1] - a0[n - 1]) * dm, (d1[n - 1] - a1[n - 1]) * dm);
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double dp = u[i + 1] - u[i];
      const double dm = u[i - 1] - u[i];
      out[i] = std::max(a0[i] * dp + d0[i] * dm, a1[i] * dp + d1[i] * dm);
    }
  }

  /// One explicit step of length `dt` (<= this->dt()). `source` may be empty.
  void step(std::span<const double> u, std::span<double> out, std::span<const double> source,
            double dt) const {
    apply_operator(u, out);
    const std::size_t n = u.size();
    const double rho = opts_.discount;
    if (source.empty()) {
      if (rho == 0.0) {
        for (std::size_t i = 0; i < n; ++i) out[i] = u[i] + dt * out[i];
      } else {
        for (std::size_t i = 0; i < n; ++i) out[i] = u[i] + dt * (out[i] - rho * u[i]);
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) out[i] = u[i] + dt * (out[i] + source[i] - rho * u[i]);
    }
  }

  /// March `u` forward by `duration`. The final step is shortened to land
  /// exactly. Returns the number of steps taken.
  long advance(std::vector<double>& u, double duration, std::span<const double> source = {}) const {
    if (u.size() != grid_.size()) throw Error("advance: state size does not match grid");
    if (!source.empty() && source.size() != grid_.size())
      throw Error("advance: source size does not match grid");
    if (duration <= 0.0) return 0;
    scratch_.resize(u.size());
    long steps = 0;
    double remaining = duration;
    while (remaining > 0.0) {
      double h = dt_;
      if (remaining < h * (1.0 + 1e-9)) h = remaining;
      step(u, scratch_, source, h);
      u.swap(scratch_);
      remaining -= h;
      ++steps;
      if ((steps & 63) == 0 || remaining <= 0.0) check_finite(u, steps);
    }
    return steps;
  }

 private:
  void check_finite(std::span<const double> u, long step) const {
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (!std::isfinite(u[i])) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "non-finite value at node %zu (x = %.6g) by step %ld", i,
                      grid_.x(i), step);
        throw NumericError(buf);
      }
    }
  }

  GDiffusionModel model_;
  Grid1D grid_;
  MarchOptions opts_;
  double dt_ = 0.0;
  std::vector<double> up_[2];  // coefficient of u[i+1] - u[i], per variance endpoint
  std::vector<double> dn_[2];  // coefficient of u[i-1] - u[i]
  mutable std::vector<double> scratch_;
};

/// Which time slices a solve keeps.
struct SliceSchedule {
  std::vector<double> extra_times;  // always stored
  int per_doubling = 4;             // geometric slices t_end 2^{-k/per_doubling}
  double geometric_floor = 1e-2;    // smallest geometric slice time
  int uniform = 0;                  // additionally store t_end k/uniform, k = 1..uniform
};

struct SolveOptions {
  MarchOptions march;
  SliceSchedule slices;
};

/// Grid-sampled u(t, x) at stored times. values[k] is the slice at times[k];
/// values[0] is the initial data.
class PdeSolution {
 public:
  PdeSolution(GDiffusionModel model, Grid1D grid, std::string label)
      : model_(std::move(model)), grid_(grid), label_(std::move(label)) {}

  const Grid1D& grid() const noexcept { return grid_; }
  const GDiffusionModel& model() const noexcept { return model_; }
  const std::string& initial_label() const noexcept { return label_; }
  const std::vector<double>& times() const noexcept { return times_; }
  const std::vector<double>& slice(std::size_t k) const { return values_.at(k); }
  const std::vector<double>& final_slice() const { return values_.back(); }
  std::size_t slice_count() const noexcept { return times_.size(); }
  double t_end() const { return times_.back(); }

  void push(double t, std::vector<double> values) {
    times_.push_back(t);
    values_.push_back(std::move(values));
  }

  /// Linear interpolation in x on one stored slice.
  double at_slice(std::size_t k, double x) const {
    if (!(x >= grid_.x_min - 1e-12 && x <= grid_.x_max + 1e-12))
      throw Error("evaluate: x = " + std::to_string(x) + " outside the solver domain");
    const auto& v = values_.at(k);
    const double s = (x - grid_.x_min) / grid_.dx();
    auto i = static_cast<std::size_t>(std::clamp(std::floor(s), 0.0, double(grid_.nx - 2)));
    const double w = std::clamp(s - static_cast<double>(i), 0.0, 1.0);
    if (w == 0.0) return v[i];
    if (w == 1.0) return v[i + 1];
    return (1.0 - w) * v[i] + w * v[i + 1];
  }

  /// Bilinear interpolation in (t, x) between stored slices.
  double evaluate(double t, double x) const {
    if (!(t >= times_.front() - 1e-12 && t <= times_.back() + 1e-12))
      throw Error("evaluate: t = " + std::to_string(t) + " outside stored times");
    auto it = std::lower_bound(times_.begin(), times_.end(), t);
    auto k = static_cast<std::size_t>(it - times_.begin());
    if (k < times_.size() && std::fabs(times_[k] - t) <= 1e-12) return at_slice(k, x);
    if (k == times_.size()) return at_slice(k - 1, x);
    if (k == 0) return at_slice(0, x);
    const double w = (t - times_[k - 1]) / (times_[k] - times_[k - 1]);
    return (1.0 - w) * at_slice(k - 1, x) + w * at_slice(k, x);
  }

  /// Index of the stored slice closest to `t`.
  std::size_t nearest_slice(double t) const {
    auto it = std::lower_bound(times_.begin(), times_.end(), t);
    auto k = static_cast<std::size_t>(it - times_.begin());
    if (k == times_.size()) return k - 1;
    if (k > 0 && t - times_[k - 1] < times_[k] - t) return k - 1;
    return k;
  }

 private:
  GDiffusionModel model_;
  Grid1D grid_;
  std::string label_;
  std::vector<double> times_;
  std::vector<std::vector<double>> values_;
};

inline double evaluate(const PdeSolution& sol, double t, double x) { return sol.evaluate(t, x); }

inline std::vector<double> output_times(double t_end, const SliceSchedule& s) {
  std::vector<double> ts{0.0, t_end};
  for (double t : s.extra_times)
    if (t > 0.0 && t <= t_end) ts.push_back(t);
  if (s.per_doubling > 0 && t_end > 0.0) {
    for (int k = 1;; ++k) {
      const double t = t_end * std::exp2(-static_cast<double>(k) / s.per_doubling);
      if (t < s.geometric_floor) break;
      ts.push_back(t);
    }
  }
  for (int k = 1; k <= s.uniform; ++k) ts.push_back(t_end * k / s.uniform);
  std::sort(ts.begin(), ts.end());
  std::vector<double> out;
  for (double t : ts)
    if (out.empty() || t - out.back() > 1e-12) out.push_back(t);
  return out;
}

/// Solve from grid-sampled initial data (and optional grid-sampled source).
inline PdeSolution solve(const Marcher& marcher, std::vector<double> initial, double t_end,
                         std::span<const double> source = {}, const SliceSchedule& slices = {},
                         std::string label = "grid data") {
  if (t_end < 0.0) throw Error("solve: t_end must be >= 0");
  if (initial.size() != marcher.grid().size())
    throw Error("solve: initial data size does not match grid");
  PdeSolution sol(marcher.model(), marcher.grid(), std::move(label));
  const auto ts = output_times(t_end, slices);
  sol.push(0.0, initial);
  double t = 0.0;
  for (std::size_t k = 1; k < ts.size(); ++k) {
    marcher.advance(initial, ts[k] - t, source);
    t = ts[k];
    sol.push(t, initial);
  }
  return sol;
}

inline PdeSolution solve(const GDiffusionModel& model, const Expr& f, double t_end,
                         const Grid1D& grid = {}, const std::optional<Expr>& source = std::nullopt,
                         const SolveOptions& opts = {}) {
  Marcher marcher(model, grid, opts.march);
  std::vector<double> src;
  if (source) src = sample(*source, marcher.grid());
  return solve(marcher, sample(f, marcher.grid()), t_end, src, opts.slices, f.str());
}

/// The model of the G-heat equation u_t = G(u_xx).
inline GDiffusionModel g_heat_model(const GFunction& g) {
  return GDiffusionModel{"g_heat", Expr::constant(0.0), Expr::constant(0.0), Expr::constant(1.0),
                         g, 2};
}

/// E^[f(sqrt(v) B_1)] for a G-normal B_1: the G-heat solution at time v, x = 0.
inline double g_normal_expectation(const GFunction& g, const Expr& f, double variance,
                                   const Grid1D& grid = {}) {
  if (variance < 0.0) throw Error("g_normal_expectation: variance must be >= 0");
  if (variance == 0.0) return f(0.0);
  Marcher marcher(g_heat_model(g), grid);
  auto u = sample(f, marcher.grid());
  marcher.advance(u, variance);
  PdeSolution sol(marcher.model(), marcher.grid(), f.str());
  sol.push(variance, std::move(u));
  return sol.at_slice(0, 0.0);
}

/// CSV with columns t,x,u.
inline void write_slices_csv(const PdeSolution& sol, std::ostream& os) {
  os << "t,x,u\n";
  char buf[96];
  for (std::size_t k = 0; k < sol.slice_count(); ++k) {
    const auto& v = sol.slice(k);
    for (std::size_t i = 0; i < v.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.17g\n", sol.times()[k], sol.grid().x(i), v[i]);
      os << buf;
    }
  }
}

}  // namespace ergo
