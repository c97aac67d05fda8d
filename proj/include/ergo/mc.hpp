#pragma once

// Scenario Monte Carlo. A volatility policy c(t, x) in [lo, hi] picks one
// measure from the family behind the G-expectation: under it d<B> = c dt and
// dB has conditional variance c dt. Euler-Maruyama then reads
//
//   X += b(X) dt + h(X) c dt + sigma(X) sqrt(c dt) Z.
//
// Each policy gives E_P[.] for one P, so the max over a finite set of
// policies is a lower bound for the sublinear expectation.
//
// Path i draws from its own generator seeded by (seed, i). Results are
// reduced in path order, so the estimate does not depend on how paths are
// split across threads.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <boost/random/normal_distribution.hpp>

#include "ergo/error.hpp"
#include "ergo/expr.hpp"
#include "ergo/gfunc.hpp"
#include "ergo/model.hpp"
#include "ergo/pde.hpp"

namespace ergo {

class ControlPolicy {
 public:
  enum class Kind { constant, table, bang_bang };

  static ControlPolicy constant(double c, const GFunction& g) {
    ControlPolicy p(Kind::constant, g);
    p.check(c);
    p.constant_ = c;
    return p;
  }

  /// values[k][i] is the variance at times[k] (ascending) and grid node i.
  /// Lookups use the nearest stored time and the nearest node.
  static ControlPolicy table(std::vector<double> times, const Grid1D& grid,
                             std::vector<std::vector<double>> values, const GFunction& g) {
    ControlPolicy p(Kind::table, g);
    p.init_table(std::move(times), grid, std::move(values));
    return p;
  }

  Kind kind() const noexcept { return kind_; }
  double sigma_lo_sq() const noexcept { return lo_; }
  double sigma_hi_sq() const noexcept { return hi_; }

  double operator()(double t, double x) const {
    if (kind_ == Kind::constant) return constant_;
    return lookup(row_for_time(t), x);
  }

  /// Row of the table used at forward time t.
  std::size_t row_for_time(double t) const {
    if (kind_ == Kind::constant) return 0;
    const double key = kind_ == Kind::bang_bang ? horizon_ - t : t;
    auto it = std::lower_bound(times_.begin(), times_.end(), key);
    auto k = static_cast<std::size_t>(it - times_.begin());
    if (k == times_.size()) return k - 1;
    if (k > 0 && key - times_[k - 1] < times_[k] - key) return k - 1;
    return k;
  }

  double lookup(std::size_t row, double x) const {
    if (kind_ == Kind::constant) return constant_;
    const double s = std::round((x - grid_.x_min) / grid_.dx());
    const auto i = static_cast<std::size_t>(std::clamp(s, 0.0, double(grid_.nx - 1)));
    return values_[row][i];
  }

  const std::vector<double>& times() const noexcept { return times_; }
  const std::vector<std::vector<double>>& values() const noexcept { return values_; }
  double horizon() const noexcept { return horizon_; }

 private:
  friend ControlPolicy bang_bang_policy(const GDiffusionModel&, const PdeSolution&);

  ControlPolicy(Kind kind, const GFunction& g)
      : kind_(kind), lo_(g.sigma_lo_sq()), hi_(g.sigma_hi_sq()) {}

  void check(double c) const {
    if (!(c >= lo_ && c <= hi_))
      throw ModelError("policy variance " + std::to_string(c) + " outside [" +
                       std::to_string(lo_) + ", " + std::to_string(hi_) + "]");
  }

  void init_table(std::vector<double> times, const Grid1D& grid,
                  std::vector<std::vector<double>> values) {
    if (times.empty() || times.size() != values.size())
      throw Error("policy table: times and values must be non-empty and aligned");
    if (!std::is_sorted(times.begin(), times.end()))
      throw Error("policy table: times must be ascending");
    for (const auto& row : values) {
      if (row.size() != grid.size()) throw Error("policy table: row size does not match grid");
      for (double c : row) check(c);
    }
    times_ = std::move(times);
    grid_ = grid;
    values_ = std::move(values);
  }

  Kind kind_;
  double lo_;
  double hi_;
  double constant_ = 0.0;
  double horizon_ = 0.0;  // bang_bang: rows are indexed by time-to-go horizon_ - t
  std::vector<double> times_;
  Grid1D grid_;
  std::vector<std::vector<double>> values_;
};

/// Feedback policy attaining the sup in the discrete generator: hi where
/// sigma^2 D2u + 2 h Du >= 0 on the slice nearest in time-to-go, else lo.
inline ControlPolicy bang_bang_policy(const GDiffusionModel& model, const PdeSolution& sol) {
  const GDiffusionModel& sm = sol.model();
  if (!(sm.g == model.g) || sm.b.str() != model.b.str() || sm.h.str() != model.h.str() ||
      sm.sigma.str() != model.sigma.str())
    throw Error("bang_bang_policy: solution was computed for a different model");
  const Grid1D& grid = sol.grid();
  const std::size_t n = grid.size();
  const double dx = grid.dx();
  std::vector<double> s2(n), h(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = model.sigma(grid.x(i));
    s2[i] = s * s;
    h[i] = model.h(grid.x(i));
  }
  std::vector<std::vector<double>> values;
  values.reserve(sol.slice_count());
  for (std::size_t k = 0; k < sol.slice_count(); ++k) {
    const auto& u = sol.slice(k);
    std::vector<double> row(n);
    for (std::size_t i = 0; i < n; ++i) {
      double d2 = 0.0, d1 = 0.0;
      if (i == 0) {
        d1 = (u[1] - u[0]) / dx;
      } else if (i + 1 == n) {
        d1 = (u[n - 1] - u[n - 2]) / dx;
      } else {
        d2 = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (dx * dx);
        d1 = (u[i + 1] - u[i - 1]) / (2.0 * dx);
      }
      row[i] = model.g.argmax(s2[i] * d2 + 2.0 * h[i] * d1);
    }
    values.push_back(std::move(row));
  }
  ControlPolicy p(ControlPolicy::Kind::bang_bang, model.g);
  p.init_table(sol.times(), grid, std::move(values));
  p.horizon_ = sol.t_end();
  return p;
}

enum class Functional {
  terminal,  // f(X_T)
  running,   // (1/T) int_0^T f(X_t) dt
};

struct McParams {
  double dt = 1e-3;
  long n_paths = 100000;
  std::uint64_t seed = 20240601;
  Functional functional = Functional::terminal;
  int threads = 0;        // 0: ERGO_THREADS, else hardware concurrency
  int record_paths = 0;   // keep the first k paths for CSV output
};

struct PathSample {
  double t;
  long path_id;
  double x;
};

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long n_paths = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  Functional functional = Functional::terminal;
  std::vector<PathSample> paths;
};

/// Worker count: `requested` if positive, else ERGO_THREADS, else the
/// hardware concurrency; never more than the number of work items.
inline int worker_count(int requested, long work_items) {
  long n = requested;
  if (n <= 0) {
    n = static_cast<long>(std::max(1u, std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("ERGO_THREADS")) {
      const long cap = std::strtol(env, nullptr, 10);
      if (cap > 0) n = std::min(n, cap);
    }
  }
  return static_cast<int>(std::clamp(n, 1L, std::max(1L, work_items)));
}

/// Run `body(begin, end)` over [0, count) split into contiguous chunks.
template <class Body>
void parallel_ranges(long count, int workers, Body&& body) {
  if (workers <= 1) {
    body(0L, count);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex mu;
  const long chunk = (count + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const long begin = w * chunk;
    const long end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

namespace detail {

// SplitMix64 finalizer; spreads (seed, path) pairs over the 64-bit key space.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Generator for one path, keyed by (seed, path index).
inline std::mt19937_64 path_generator(std::uint64_t seed, long path) {
  return std::mt19937_64(detail::mix64(detail::mix64(seed) ^ static_cast<std::uint64_t>(path)));
}

using StandardNormal = boost::random::normal_distribution<double>;

inline McEstimate simulate(const GDiffusionModel& model, const ControlPolicy& policy, double x0,
                           const Expr& f, double t_end, const McParams& params) {
  if (!(params.dt > 0.0)) throw Error("simulate: dt must be positive");
  if (params.n_paths < 1) throw Error("simulate: n_paths must be >= 1");
  if (!(t_end >= 0.0)) throw Error("simulate: t_end must be >= 0");
  if (policy.sigma_lo_sq() < model.g.sigma_lo_sq() - 1e-15 ||
      policy.sigma_hi_sq() > model.g.sigma_hi_sq() + 1e-15)
    throw ModelError("simulate: policy range exceeds the model's variance interval");

  const long n_steps = t_end > 0.0 ? static_cast<long>(std::ceil(t_end / params.dt - 1e-9)) : 0;
  const double dt = n_steps > 0 ? t_end / static_cast<double>(n_steps) : params.dt;
  std::vector<std::size_t> rows(static_cast<std::size_t>(n_steps));
  for (long k = 0; k < n_steps; ++k)
    rows[static_cast<std::size_t>(k)] = policy.row_for_time(static_cast<double>(k) * dt);

  const Expr& b = model.b;
  const Expr& h = model.h;
  const Expr& sigma = model.sigma;
  const bool running = params.functional == Functional::running;
  std::vector<double> results(static_cast<std::size_t>(params.n_paths));
  const long recorded = std::min<long>(params.record_paths, params.n_paths);
  std::vector<std::vector<PathSample>> kept(static_cast<std::size_t>(recorded));

  auto run = [&](long begin, long end) {
    for (long path = begin; path < end; ++path) {
      auto gen = path_generator(params.seed, path);
      StandardNormal normal(0.0, 1.0);
      double x = x0;
      double acc = 0.0;
      std::vector<PathSample>* keep = path < recorded ? &kept[static_cast<std::size_t>(path)] : nullptr;
      if (keep) keep->push_back({0.0, path, x});
      for (long k = 0; k < n_steps; ++k) {
        if (running) acc += f(x);
        const double c = policy.lookup(rows[static_cast<std::size_t>(k)], x);
        const double z = normal(gen);
        x += b(x) * dt + h(x) * c * dt + sigma(x) * std::sqrt(c * dt) * z;
        if (!std::isfinite(x))
          throw NumericError("non-finite path value on path " + std::to_string(path) +
                             " at step " + std::to_string(k + 1));
        if (keep) keep->push_back({static_cast<double>(k + 1) * dt, path, x});
      }
      double value;
      if (running)
        value = n_steps > 0 ? acc / static_cast<double>(n_steps) : f(x);
      else
        value = f(x);
      if (!std::isfinite(value))
        throw NumericError("non-finite functional value on path " + std::to_string(path));
      results[static_cast<std::size_t>(path)] = value;
    }
  };
  parallel_ranges(params.n_paths, worker_count(params.threads, params.n_paths), run);

  McEstimate est;
  double sum = 0.0;
  for (double v : results) sum += v;
  est.mean = sum / static_cast<double>(params.n_paths);
  if (params.n_paths > 1) {
    double ss = 0.0;
    for (double v : results) ss += (v - est.mean) * (v - est.mean);
    const double var = ss / static_cast<double>(params.n_paths - 1);
    est.std_error = std::sqrt(var / static_cast<double>(params.n_paths));
  }
  est.n_paths = params.n_paths;
  est.dt = dt;
  est.seed = params.seed;
  est.functional = params.functional;
  for (auto& v : kept) est.paths.insert(est.paths.end(), v.begin(), v.end());
  return est;
}

struct LowerBound {
  double value = -std::numeric_limits<double>::infinity();
  std::size_t best = 0;  // index of the policy attaining the max
  std::vector<McEstimate> estimates;
};

/// max over policies of the scenario mean: a lower bound for E^[.].
inline LowerBound lower_bound(const GDiffusionModel& model, const Expr& f, double x0, double t_end,
                              const std::vector<ControlPolicy>& policies, const McParams& params) {
  if (policies.empty()) throw Error("lower_bound: empty policy list");
  LowerBound lb;
  for (std::size_t k = 0; k < policies.size(); ++k) {
    lb.estimates.push_back(simulate(model, policies[k], x0, f, t_end, params));
    if (lb.estimates.back().mean > lb.value) {
      lb.value = lb.estimates.back().mean;
      lb.best = k;
    }
  }
  return lb;
}

/// Empirical contraction rate -(1/2T) log(mean |X^x_T - X^x'_T|^2 / |x - x'|^2)
/// for two solutions sharing noise and scenario. The scenario is read off the
/// first path.
inline double contraction_check(const GDiffusionModel& model, double x, double x_prime,
                                double t_end, const McParams& params,
                                const ControlPolicy& policy) {
  if (x == x_prime) throw Error("contraction_check: starting points must differ");
  if (!(t_end > 0.0)) throw Error("contraction_check: t_end must be positive");
  const long n_steps = static_cast<long>(std::ceil(t_end / params.dt - 1e-9));
  const double dt = t_end / static_cast<double>(n_steps);
  std::vector<double> sq(static_cast<std::size_t>(params.n_paths));
  auto run = [&](long begin, long end) {
    for (long path = begin; path < end; ++path) {
      auto gen = path_generator(params.seed, path);
      StandardNormal normal(0.0, 1.0);
      double a = x, c2 = x_prime;
      for (long k = 0; k < n_steps; ++k) {
        const double c = policy(static_cast<double>(k) * dt, a);
        const double dw = std::sqrt(c * dt) * normal(gen);
        a += model.b(a) * dt + model.h(a) * c * dt + model.sigma(a) * dw;
        c2 += model.b(c2) * dt + model.h(c2) * c * dt + model.sigma(c2) * dw;
      }
      if (!std::isfinite(a) || !std::isfinite(c2))
        throw NumericError("non-finite value in contraction_check on path " + std::to_string(path));
      sq[static_cast<std::size_t>(path)] = (a - c2) * (a - c2);
    }
  };
  parallel_ranges(params.n_paths, worker_count(params.threads, params.n_paths), run);
  double mean = 0.0;
  for (double v : sq) mean += v;
  mean /= static_cast<double>(params.n_paths);
  const double d0 = (x - x_prime) * (x - x_prime);
  if (mean == 0.0) return std::numeric_limits<double>::infinity();
  return -std::log(mean / d0) / (2.0 * t_end);
}

inline double contraction_check(const GDiffusionModel& model, double x, double x_prime,
                                double t_end, const McParams& params) {
  return contraction_check(model, x, x_prime, t_end, params,
                           ControlPolicy::constant(model.g.sigma_hi_sq(), model.g));
}

/// CSV with columns t,path_id,x.
inline void write_paths_csv(const McEstimate& est, std::ostream& os) {
  os << "t,path_id,x\n";
  char buf[96];
  for (const auto& p : est.paths) {
    std::snprintf(buf, sizeof buf, "%.10g,%ld,%.17g\n", p.t, p.path_id, p.x);
    os << buf;
  }
}

}  // namespace ergo
