#pragma once

#include <cmath>

namespace levyscale {

/// (e^{s x} - 1) / s, continuous at s = 0 (value x).
inline double exp_ratio(double s, double x) {
  if (s == 0.0) return x;
  return std::expm1(s * x) / s;
}

/// d/ds exp_ratio(s, x); series near s x = 0.
inline double exp_ratio_ds(double s, double x) {
  const double sx = s * x;
  if (std::abs(sx) > 0.1) return (x * std::exp(sx) - exp_ratio(s, x)) / s;
  // sum_{n>=2} (n - 1) s^{n-2} x^n / n!
  double term = x * x / 2.0;
  double sum = term;
  for (int n = 3; n < 30; ++n) {
    term *= sx / n;
    const double add = (n - 1) * term;
    sum += add;
    if (std::abs(add) < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

}  // namespace levyscale
