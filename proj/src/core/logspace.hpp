#pragma once

#include <algorithm>
#include <cmath>
#include <span>

namespace posehmm {

// Sentinel for log(0). A fixed large negative constant rather than -inf so
// tables stay dense and arithmetic never produces NaN (-inf - -inf).
inline constexpr double kLogZero = -1e30;
// Values at or below this are treated as log(0) by all log-space arithmetic.
inline constexpr double kLogZeroGuard = -1e29;

inline bool is_log_zero(double x) { return x <= kLogZeroGuard; }

inline double log_clamped(double p) { return p > 0.0 ? std::log(p) : kLogZero; }

// Sum of two log-space values; either may be the zero sentinel.
inline double log_add(double a, double b) {
  if (is_log_zero(a)) return is_log_zero(b) ? kLogZero : b;
  if (is_log_zero(b)) return a;
  double hi = std::max(a, b);
  double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

// Product of two log-space values (sum of logs) with zero absorption.
inline double log_mul(double a, double b) {
  if (is_log_zero(a) || is_log_zero(b)) return kLogZero;
  return a + b;
}

inline double log_sum_exp(std::span<const double> values) {
  double hi = kLogZero;
  for (double v : values)
    if (!is_log_zero(v) && v > hi) hi = v;
  if (is_log_zero(hi)) return kLogZero;
  double acc = 0.0;
  for (double v : values)
    if (!is_log_zero(v)) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

}  // namespace posehmm
