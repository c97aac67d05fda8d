#pragma once

// Reference values used only by the test suite. Nothing here calls into the
// library: Gaussian expectations come from Gauss-Hermite quadrature, tail
// probabilities from composite Simpson, partial moments from closed forms.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace oracle {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;  // for the weight exp(-y^2)
};

/// n-point Gauss-Hermite rule (physicists' weight), Newton iteration on the
/// three-term recurrence for the normalized Hermite functions.
inline Rule gauss_hermite(int n) {
  Rule r;
  r.nodes.assign(n, 0.0);
  r.weights.assign(n, 0.0);
  const double pim4 = std::pow(std::numbers::pi, -0.25);
  const int m = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    if (i == 0)
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
    else if (i == 1)
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    else if (i == 2)
      z = 1.86 * z - 0.86 * r.nodes[0];
    else if (i == 3)
      z = 1.91 * z - 0.91 * r.nodes[1];
    else
      z = 2.0 * z - r.nodes[i - 2];
    double pp = 0.0;
    int it = 0;
    for (; it < 100; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::fabs(z - z1) <= 1e-15 * std::max(1.0, std::fabs(z))) break;
    }
    if (it == 100) throw std::runtime_error("gauss_hermite: Newton did not converge");
    r.nodes[i] = z;
    r.nodes[n - 1 - i] = -z;
    r.weights[i] = r.weights[n - 1 - i] = 2.0 / (pp * pp);
  }
  return r;
}

/// E[f(sqrt(v) Z)] for Z ~ N(0, 1).
inline double normal_expectation(const std::function<double(double)>& f, double variance,
                                 int n = 96) {
  static thread_local std::vector<Rule> cache;
  if (cache.size() <= static_cast<std::size_t>(n)) cache.resize(n + 1);
  if (cache[n].nodes.empty()) cache[n] = gauss_hermite(n);
  const Rule& r = cache[n];
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += r.weights[i] * f(std::sqrt(2.0 * variance) * r.nodes[i]);
  return s / std::sqrt(std::numbers::pi);
}

/// E[f(sqrt(v) Z)] by composite Simpson on [-12 sd, 12 sd], split at the
/// given kinks of f so each piece is smooth.
inline double normal_expectation_piecewise(const std::function<double(double)>& f,
                                           double variance, std::vector<double> kinks = {},
                                           int panels = 2000) {
  const double sd = std::sqrt(variance);
  const double lim = 12.0 * sd;
  std::vector<double> cuts{-lim};
  for (double k : kinks)
    if (k > -lim && k < lim) cuts.push_back(k);
  cuts.push_back(lim);
  std::sort(cuts.begin(), cuts.end());
  auto g = [&](double y) {
    return f(y) * std::exp(-0.5 * y * y / variance) / (sd * std::sqrt(2.0 * std::numbers::pi));
  };
  double total = 0.0;
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double a = cuts[c], b = cuts[c + 1];
    const double h = (b - a) / (2 * panels);
    double s = g(a) + g(b);
    for (int i = 1; i < 2 * panels; ++i) s += g(a + i * h) * (i % 2 ? 4.0 : 2.0);
    total += s * h / 3.0;
  }
  return total;
}

/// Standard normal density.
inline double phi(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

/// P(|Z| <= a) for Z ~ N(0, 1), composite Simpson on [0, a].
inline double prob_abs_below(double a, int panels = 4000) {
  if (a <= 0.0) return 0.0;
  const double h = a / panels;
  double s = phi(0.0) + phi(a);
  for (int k = 1; k < panels; ++k) s += (k % 2 ? 4.0 : 2.0) * phi(k * h);
  return 2.0 * s * h / 3.0;
}

/// E[Z^k 1{|Z| <= a}] for k = 0, 2, 4, Z ~ N(0, 1), via integration by parts:
/// E[Z^{k} 1] = (k - 1) E[Z^{k-2} 1] - 2 a^{k-1} phi(a).
inline double truncated_even_moment(int k, double a) {
  if (k == 0) return prob_abs_below(a);
  if (k < 0 || k % 2) throw std::invalid_argument("even k only");
  return (k - 1) * truncated_even_moment(k - 2, a) - 2.0 * std::pow(a, k - 1) * phi(a);
}

}  // namespace oracle
