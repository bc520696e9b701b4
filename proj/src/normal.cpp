#include "cpsi/normal.hpp"

#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <limits>

namespace cpsi::normal {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;
constexpr double kMillsSwitch = 37.0;
constexpr double kInf = std::numeric_limits<double>::infinity();

// log(1 - exp(x)) for x <= 0.
double log1mexp(double x) {
  if (x == 0.0) return -kInf;
  return x > -0.6931471805599453 ? std::log(-std::expm1(x)) : std::log1p(-std::exp(x));
}

// log(exp(x) - exp(y)) for x >= y.
double log_diff_exp(double x, double y) {
  if (y == -kInf) return x;
  return x + log1mexp(y - x);
}

}  // namespace

double pdf(double x) {
  if (std::isinf(x)) return 0.0;
  return std::exp(-0.5 * x * x - kLogSqrt2Pi);
}

double cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double sf(double x) { return 0.5 * std::erfc(x * kInvSqrt2); }

double log_sf(double x) {
  if (x == kInf) return -kInf;
  if (x == -kInf) return 0.0;
  if (x < 0.0) return std::log1p(-0.5 * std::erfc(-x * kInvSqrt2));
  if (x < kMillsSwitch) return std::log(0.5 * std::erfc(x * kInvSqrt2));
  const double r = 1.0 / (x * x);
  const double series = 1.0 - r * (1.0 - 3.0 * r * (1.0 - 5.0 * r * (1.0 - 7.0 * r)));
  return -0.5 * x * x - std::log(x) - kLogSqrt2Pi + std::log(series);
}

double isf(double q) {
  if (q <= 0.0) return kInf;
  if (q >= 1.0) return -kInf;
  return std::sqrt(2.0) * boost::math::erfc_inv(2.0 * q);
}

double isf_log(double log_q) {
  if (log_q >= 0.0) return -kInf;
  if (log_q == -kInf) return kInf;
  if (log_q > -700.0) return isf(std::exp(log_q));
  // Newton on log_sf, whose derivative is -pdf/sf (the inverse Mills ratio).
  double x = std::sqrt(-2.0 * log_q);
  for (int it = 0; it < 100; ++it) {
    const double f = log_sf(x) - log_q;
    const double r = 1.0 / (x * x);
    const double mills = x / (1.0 - r * (1.0 - 3.0 * r));
    const double step = f / mills;
    x += step;
    if (std::abs(step) < 1e-14 * x) break;
  }
  return x;
}

double log_interval_mass(double a, double b) {
  if (!(a < b)) return -kInf;
  if (a >= 0.0) return log_diff_exp(log_sf(a), log_sf(b));
  if (b <= 0.0) return log_diff_exp(log_sf(-b), log_sf(-a));
  return std::log1p(-(sf(b) + sf(-a)));
}

TailProbability truncated_sf(double x, double a, double b) {
  TailProbability out;
  if (x <= a) {
    out.value = 1.0;
    return out;
  }
  if (x >= b) {
    out.value = 0.0;
    return out;
  }
  double log_num, log_den;
  if (a >= 0.0) {
    log_num = log_diff_exp(log_sf(x), log_sf(b));
    log_den = log_diff_exp(log_sf(a), log_sf(b));
  } else if (b <= 0.0) {
    log_num = log_diff_exp(log_sf(-b), log_sf(-x));
    log_den = log_diff_exp(log_sf(-b), log_sf(-a));
  } else {
    log_num = x >= 0.0 ? log_diff_exp(log_sf(x), log_sf(b))
                       : std::log(std::max(0.0, sf(x) - sf(b)));
    log_den = log_interval_mass(a, b);
  }
  if (!std::isfinite(log_den)) {
    // Interval too narrow to resolve: the density is flat across it.
    out.low_precision = true;
    out.value = std::isfinite(b) ? std::clamp((b - x) / (b - a), 0.0, 1.0) : 0.0;
    return out;
  }
  out.value = std::clamp(std::exp(log_num - log_den), 0.0, 1.0);
  return out;
}

}  // namespace cpsi::normal
