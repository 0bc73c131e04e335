#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace indagg {

inline double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

namespace detail {

// Continued fraction for I_x(a, b) (modified Lentz). Converges quickly for
// x < (a + 1) / (a + b + 2).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 100000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace detail

/// Regularized incomplete beta function I_x(a, b).
inline double reg_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0 && x <= 1.0))
    throw std::domain_error("reg_incomplete_beta: argument out of domain");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0))
    return std::clamp(front * detail::beta_continued_fraction(a, b, x) / a, 0.0, 1.0);
  return std::clamp(1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b, 0.0, 1.0);
}

/// Two-sided p-value P(|T| >= |t|) for Student's t with `df` degrees of freedom.
inline double student_t_two_sided(double t, double df) {
  if (std::isnan(t)) return 1.0;
  if (std::isinf(t)) return 0.0;
  const double t2 = t * t;
  return reg_incomplete_beta(0.5 * df, 0.5, df / (df + t2));
}

/// P(F <= f) for the F distribution with (d1, d2) degrees of freedom.
inline double f_cdf(double f, double d1, double d2) {
  if (f <= 0.0) return 0.0;
  if (std::isinf(f)) return 1.0;
  return reg_incomplete_beta(0.5 * d1, 0.5 * d2, d1 * f / (d1 * f + d2));
}

/// P(F >= f), evaluated directly rather than as 1 - cdf.
inline double f_sf(double f, double d1, double d2) {
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  return reg_incomplete_beta(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * f));
}

/// Kolmogorov survival function Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
inline double kolmogorov_q(double lambda) {
  if (lambda < 0.0) throw std::domain_error("kolmogorov_q: lambda must be >= 0");
  // Below 0.05 the true value differs from 1 by less than 1e-300.
  if (lambda < 0.05) return 1.0;
  const double l2 = -2.0 * lambda * lambda;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k < 100000; ++k) {
    const double term = std::exp(l2 * k * k);
    sum += sign * term;
    if (term < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

}  // namespace indagg
