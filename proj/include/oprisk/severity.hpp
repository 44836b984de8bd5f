#pragma once

// Lognormal severities, optionally left-truncated, with Poisson frequencies.

#include "oprisk/sma.hpp"

namespace oprisk {

/// Lognormal(mu, sigma) on the log-EUR scale, conditioned on X > truncation
/// when truncation > 0.
struct SeverityModel {
  double mu = 0.0;
  double sigma = 1.0;
  Eur truncation = 0.0;

  /// Throws InvalidInput unless sigma > 0 and truncation >= 0.
  void validate() const;
};

/// Poisson(lambda) counts per year of losses drawn from `severity`; lambda
/// counts only losses above severity.truncation.
struct CompoundModel {
  SeverityModel severity;
  double lambda = 0.0;

  void validate() const;
};

double trunc_cdf(const SeverityModel& s, Eur x);
/// 1 - trunc_cdf, computed without cancellation in the tail.
double trunc_sf(const SeverityModel& s, Eur x);
/// Throws InvalidInput unless 0 < p < 1.
Eur trunc_quantile(const SeverityModel& s, double p);
/// x with trunc_sf(x) == q; keeps precision for q down to ~1e-300.
Eur trunc_upper_quantile(const SeverityModel& s, double q);
Eur trunc_mean(const SeverityModel& s);

/// E[X 1{X > y}] / E[X] under the (truncated) model. Requires y >= truncation.
double partial_expectation_fraction(const SeverityModel& s, Eur threshold);

/// Population alpha*: 7 + 7 frac(10m) + 5 frac(100m).
double alpha_star_analytic(const SeverityModel& s);

/// lambda * trunc_mean.
Eur expected_el(const CompoundModel& m);
/// alpha*_analytic * lambda * trunc_mean.
Eur expected_lc(const CompoundModel& m);
/// el / trunc_mean. Requires el > 0.
double lambda_from_el(const SeverityModel& s, Eur el);

/// Annual frequency of losses above `threshold`. Requires threshold >= truncation.
double frequency_above(const CompoundModel& m, Eur threshold);

/// The same loss process restricted to losses above `floor`: severity
/// truncated at max(floor, truncation) and lambda thinned accordingly.
CompoundModel condition_on_floor(const CompoundModel& m, Eur floor);

}  // namespace oprisk
