#pragma once

// Standard normal helpers with tail-stable logarithms.

namespace cpsi::normal {

double pdf(double x);
double cdf(double x);
// Upper tail 1 - cdf(x) without cancellation.
double sf(double x);
// log(sf(x)); erfc below 37 standard units, Mills-ratio series beyond.
double log_sf(double x);
// x with sf(x) = q, for q in (0, 1).
double isf(double q);
// x with log_sf(x) = log_q, for log_q < 0. Works where q underflows.
double isf_log(double log_q);

// Probability mass of [a, b] in standard units, as log. Returns -inf when
// the mass is not representable even in log-space.
double log_interval_mass(double a, double b);

// P(X >= x | a <= X <= b) for standard normal X, a <= x <= b.
struct TailProbability {
  double value = 0.0;
  bool low_precision = false;
};
TailProbability truncated_sf(double x, double a, double b);

}  // namespace cpsi::normal
