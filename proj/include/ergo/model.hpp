#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ergo/error.hpp"
#include "ergo/expr.hpp"
#include "ergo/gfunc.hpp"

namespace ergo {

struct Interval {
  double lo = -8.0;
  double hi = 8.0;
};

/// dX = b(X) dt + h(X) d<B> + sigma(X) dB driven by a G-Brownian motion
/// with generator `g`. `p` is the growth order of admissible test functions
/// (they live in C_{2p,Lip}).
struct GDiffusionModel {
  std::string name = "custom";
  Expr b;
  Expr h;
  Expr sigma;
  GFunction g;
  int p = 2;

  GDiffusionModel with_g(const GFunction& other) const {
    GDiffusionModel m = *this;
    m.g = other;
    return m;
  }
};

/// Empirical Lipschitz constant and dissipativity margin on a probe set.
struct AssumptionReport {
  double lipschitz_estimate = 0.0;
  double eta_estimate = 0.0;  // <= 0: dissipativity not detected on the probes
  long sample_count = 0;
  Interval domain;
};

inline void validate(const GDiffusionModel& m) {
  if (m.p < 1) throw ModelError("growth order p must be >= 1");
}

inline GDiffusionModel make_custom(std::string_view b, std::string_view h, std::string_view sigma,
                                   GFunction g = {}, int p = 2) {
  GDiffusionModel m{"custom", parse(b), parse(h), parse(sigma), g, p};
  validate(m);
  return m;
}

/// Built-in models:
///   g_ou [alpha]       dX = -alpha X dt + dB
///   gou_bracket [m]    dX = (m - X) dt + d<B> + dB
///   dirac []           dX = -X dt + 0.5 X exp(-X^2) dB   (all coefficients vanish at 0)
/// Coefficient expressions for `custom` go through make_custom instead.
inline GDiffusionModel make_builtin(std::string_view name, std::span<const double> params,
                                    GFunction g = {}, int p = 2) {
  auto need = [&](std::size_t n) {
    if (params.size() != n)
      throw ModelError("model '" + std::string(name) + "' takes " + std::to_string(n) +
                       " parameter(s), got " + std::to_string(params.size()));
  };
  const Expr x = Expr::variable();
  const auto c = [](double v) { return Expr::constant(v); };
  GDiffusionModel m;
  m.g = g;
  m.p = p;
  m.name = std::string(name);
  if (name == "g_ou") {
    need(1);
    if (!(params[0] > 0.0)) throw ModelError("g_ou: alpha must be positive");
    m.b = c(-params[0]) * x;
    m.h = c(0.0);
    m.sigma = c(1.0);
  } else if (name == "gou_bracket") {
    need(1);
    m.b = c(params[0]) - x;
    m.h = c(1.0);
    m.sigma = c(1.0);
  } else if (name == "dirac") {
    need(0);
    m.b = -x;
    m.h = c(0.0);
    m.sigma = c(0.5) * x * Expr::unary(Op::Exp, -Expr::power(x, 2));
  } else if (name == "custom") {
    throw ModelError("model 'custom' needs coefficient expressions (b, h, sigma)");
  } else {
    throw ModelError("unknown model '" + std::string(name) + "'");
  }
  validate(m);
  return m;
}

inline GDiffusionModel make_builtin(std::string_view name, std::initializer_list<double> params,
                                    GFunction g = {}, int p = 2) {
  return make_builtin(name, std::span<const double>(params.begin(), params.size()), g, p);
}

/// Probe (H1) and (H2) on a uniform grid of `n_samples` points over `domain`,
/// using all ordered pairs x != x'. In one dimension (H2) reads
///   G((2p-1)(s(x)-s(x'))^2 + 2(x-x')(h(x)-h(x'))) + (x-x')(b(x)-b(x')) <= -eta |x-x'|^2.
/// Never throws on a failed assumption; the margins are reported.
inline AssumptionReport estimate_h2_eta(const GDiffusionModel& m, Interval domain, int n_samples) {
  if (n_samples < 2) throw ModelError("estimate_h2_eta: need at least 2 samples");
  if (!(domain.hi > domain.lo)) throw ModelError("estimate_h2_eta: empty domain");
  const auto n = static_cast<std::size_t>(n_samples);
  std::vector<double> xs(n), bs(n), hs(n), ss(n);
  const double step = (domain.hi - domain.lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = i + 1 == n ? domain.hi : domain.lo + step * static_cast<double>(i);
    bs[i] = m.b(xs[i]);
    hs[i] = m.h(xs[i]);
    ss[i] = m.sigma(xs[i]);
  }
  const double k = 2.0 * m.p - 1.0;
  double eta = std::numeric_limits<double>::infinity();
  double lip = 0.0;
  long count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double dx = xs[i] - xs[j];
      const double ds = ss[i] - ss[j];
      const double lhs = m.g(k * ds * ds + 2.0 * dx * (hs[i] - hs[j])) + dx * (bs[i] - bs[j]);
      eta = std::min(eta, -lhs / (dx * dx));
      lip = std::max(lip, (std::fabs(bs[i] - bs[j]) + std::fabs(hs[i] - hs[j]) + std::fabs(ds)) /
                              std::fabs(dx));
      ++count;
    }
  }
  return AssumptionReport{lip, eta, count, domain};
}

}  // namespace ergo
