#pragma once

#include <cmath>
#include <numbers>

namespace mist::normal {

inline double pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

// Lower and upper tail probabilities, both accurate far into their own tail.
inline double cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
inline double sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

inline double log_density(double x, double mean, double variance) {
  const double d = x - mean;
  return -0.5 * std::log(2.0 * std::numbers::pi * variance) - 0.5 * d * d / variance;
}

}  // namespace mist::normal
