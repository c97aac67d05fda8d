#pragma once

#include <string>

#include "ergo/error.hpp"

namespace ergo {

/// One-dimensional sublinear generator G(a) = 1/2 (hi * a^+ - lo * a^-),
/// fixed by the variance interval [sigma_lo_sq, sigma_hi_sq] of the driving
/// G-Brownian motion. Every monotone sublinear G on the reals has this form.
class GFunction {
 public:
  GFunction() = default;
  GFunction(double sigma_lo_sq, double sigma_hi_sq) : lo_(sigma_lo_sq), hi_(sigma_hi_sq) {
    if (!(sigma_lo_sq >= 0.0) || !(sigma_hi_sq > 0.0) || sigma_lo_sq > sigma_hi_sq)
      throw ModelError("variance interval must satisfy 0 <= sigma_lo_sq <= sigma_hi_sq, "
                       "sigma_hi_sq > 0 (got " +
                       std::to_string(sigma_lo_sq) + ", " + std::to_string(sigma_hi_sq) + ")");
  }

  double sigma_lo_sq() const noexcept { return lo_; }
  double sigma_hi_sq() const noexcept { return hi_; }

  double operator()(double a) const noexcept {
    return 0.5 * (hi_ * (a > 0.0 ? a : 0.0) - lo_ * (a < 0.0 ? -a : 0.0));
  }

  /// The variance candidate attaining the sup for argument `a`.
  double argmax(double a) const noexcept { return a >= 0.0 ? hi_ : lo_; }

  /// G(A) - G(B) >= 1/2 lo (A - B) with lo > 0; required by ergodic computations.
  bool nondegenerate() const noexcept { return lo_ > 0.0; }

  bool classical() const noexcept { return lo_ == hi_; }

  friend bool operator==(const GFunction&, const GFunction&) = default;

 private:
  double lo_ = 0.25;
  double hi_ = 1.0;
};

inline double g_eval(const GFunction& g, double a) noexcept { return g(a); }

inline bool check_nondegenerate(const GFunction& g) noexcept { return g.nondegenerate(); }

}  // namespace ergo
