#include "oprisk/severity.hpp"

#include <cmath>
#include <limits>

#include "oprisk/errors.hpp"
#include "oprisk/normal.hpp"

namespace oprisk {

namespace {

// Standardized log of the truncation point; -inf when untruncated.
double z_trunc(const SeverityModel& s) {
  if (s.truncation <= 0.0) return -std::numeric_limits<double>::infinity();
  return (std::log(s.truncation) - s.mu) / s.sigma;
}

double z_of(const SeverityModel& s, Eur x) { return (std::log(x) - s.mu) / s.sigma; }

}  // namespace

void SeverityModel::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidInput("sigma must be positive");
  if (!std::isfinite(mu)) throw InvalidInput("mu must be finite");
  if (!(truncation >= 0.0) || !std::isfinite(truncation)) {
    throw InvalidInput("truncation must be non-negative");
  }
}

void CompoundModel::validate() const {
  severity.validate();
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidInput("lambda must be >= 0");
}

double trunc_cdf(const SeverityModel& s, Eur x) {
  if (x <= s.truncation || x <= 0.0) return 0.0;
  const double zt = z_trunc(s);
  const double z = z_of(s, x);
  const double st = normal::sf(zt);
  // Above the median, difference of upper tails is the accurate form.
  if (z > 0.0) return (st - normal::sf(z)) / st;
  return (normal::cdf(z) - normal::cdf(zt)) / st;
}

double trunc_sf(const SeverityModel& s, Eur x) {
  if (x <= s.truncation || x <= 0.0) return 1.0;
  return normal::sf(z_of(s, x)) / normal::sf(z_trunc(s));
}

Eur trunc_quantile(const SeverityModel& s, double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidInput("quantile level must lie in (0, 1)");
  return trunc_upper_quantile(s, 1.0 - p);
}

Eur trunc_upper_quantile(const SeverityModel& s, double q) {
  if (!(q > 0.0 && q < 1.0)) throw InvalidInput("tail probability must lie in (0, 1)");
  const double st = normal::sf(z_trunc(s));
  const double tail = q * st;
  // For small tails invert sf directly, otherwise go through the cdf.
  const double z = tail < 0.5 ? normal::upper_quantile(tail) : normal::quantile(1.0 - tail);
  return std::exp(s.mu + s.sigma * z);
}

Eur trunc_mean(const SeverityModel& s) {
  const double zt = z_trunc(s);
  return std::exp(s.mu + 0.5 * s.sigma * s.sigma) * normal::cdf(s.sigma - zt) / normal::sf(zt);
}

double partial_expectation_fraction(const SeverityModel& s, Eur threshold) {
  if (!(threshold >= s.truncation)) {
    throw InvalidInput("threshold must not be below the truncation point");
  }
  if (threshold <= 0.0) return 1.0;
  const double shifted = s.mu + s.sigma * s.sigma;
  const double num = normal::cdf((shifted - std::log(threshold)) / s.sigma);
  const double den = s.truncation > 0.0 ? normal::cdf((shifted - std::log(s.truncation)) / s.sigma)
                                        : 1.0;
  return num / den;
}

double alpha_star_analytic(const SeverityModel& s) {
  auto frac = [&](Eur y) {
    return y <= s.truncation ? 1.0 : partial_expectation_fraction(s, y);
  };
  return 7.0 + 7.0 * frac(kLcThresholdLow) + 5.0 * frac(kLcThresholdHigh);
}

Eur expected_el(const CompoundModel& m) { return m.lambda * trunc_mean(m.severity); }

Eur expected_lc(const CompoundModel& m) {
  return alpha_star_analytic(m.severity) * expected_el(m);
}

double lambda_from_el(const SeverityModel& s, Eur el) {
  if (!(el > 0.0)) throw InvalidInput("expected loss must be positive");
  return el / trunc_mean(s);
}

double frequency_above(const CompoundModel& m, Eur threshold) {
  if (!(threshold >= m.severity.truncation)) {
    throw InvalidInput("threshold must not be below the truncation point");
  }
  return m.lambda * trunc_sf(m.severity, threshold);
}

CompoundModel condition_on_floor(const CompoundModel& m, Eur floor) {
  if (floor <= m.severity.truncation) return m;
  CompoundModel out = m;
  out.lambda = frequency_above(m, floor);
  out.severity.truncation = floor;
  return out;
}

}  // namespace oprisk
