#pragma once

// Standard normal helpers. Tail functions go through erfc so that
// probabilities down to ~1e-300 keep full relative precision.

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

namespace oprisk::normal {

inline double pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

inline double cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Upper tail 1 - cdf(z).
inline double sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

inline double quantile(double p) {
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

/// z such that sf(z) == q; accurate for tiny q.
inline double upper_quantile(double q) {
  return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q);
}

/// log(sf(z)), with an asymptotic expansion where sf underflows.
inline double log_sf(double z) {
  if (z < 30.0) return std::log(sf(z));
  const double inv2 = 1.0 / (z * z);
  return -0.5 * z * z - std::log(z) - 0.5 * std::log(2.0 * std::numbers::pi) +
         std::log1p(-inv2 + 3.0 * inv2 * inv2);
}

/// pdf(z) / sf(z), the inverse Mills ratio.
inline double hazard(double z) {
  if (z < 30.0) return pdf(z) / sf(z);
  const double inv2 = 1.0 / (z * z);
  return z * (1.0 + inv2 - 2.0 * inv2 * inv2);
}

}  // namespace oprisk::normal
