#pragma once

// Empirical link between the BI Component and the Loss Component:
//   ln(BIC) = intercept + slope * ln(ln(LC)) + eps,   eps ~ N(0, resid_sd),
// with BIC and LC in millions of EUR.

#include "oprisk/rng.hpp"
#include "oprisk/sma.hpp"

namespace oprisk {

struct RegressionParams {
  double intercept = -2.16;
  double slope = 4.90;
  double resid_sd = 0.486;

  void validate() const;
};

/// Quantile levels of LC given BIC used for the low / median / high rows.
enum class LcQuantile { Low, Median, High };
double quantile_level(LcQuantile q);
const char* to_string(LcQuantile q);

/// BIC for a given LC and residual. Throws DomainError unless lc > e million.
Eur bic_from_lc(Eur lc, const RegressionParams& params, double epsilon);

/// BIC drawn from the regression around an expected LC.
Eur sample_bic(Eur expected_lc, const RegressionParams& params, RngStream& stream);

/// q-quantile of LC at a fixed BIC. LC falls as eps rises, so this uses the
/// (1 - q)-quantile of eps.
Eur lc_quantile_given_bic(Eur bic, double q, const RegressionParams& params);

/// BI whose scheduled BIC equals `bic`.
Eur median_bi_from_bic(Eur bic, const BicSchedule& schedule = BicSchedule::standard());

}  // namespace oprisk
