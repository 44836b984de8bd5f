#include "oprisk/regression.hpp"

#include <cmath>
#include <numbers>

#include "oprisk/errors.hpp"
#include "oprisk/normal.hpp"

namespace oprisk {

void RegressionParams::validate() const {
  if (!(slope > 0.0)) throw InvalidInput("regression slope must be positive");
  if (!(resid_sd > 0.0)) throw InvalidInput("regression residual sd must be positive");
  if (!std::isfinite(intercept)) throw InvalidInput("regression intercept must be finite");
}

double quantile_level(LcQuantile q) {
  switch (q) {
    case LcQuantile::Low: return 0.1;
    case LcQuantile::Median: return 0.5;
    case LcQuantile::High: return 0.9;
  }
  return 0.5;
}

const char* to_string(LcQuantile q) {
  switch (q) {
    case LcQuantile::Low: return "low";
    case LcQuantile::Median: return "median";
    case LcQuantile::High: return "high";
  }
  return "?";
}

Eur bic_from_lc(Eur lc, const RegressionParams& params, double epsilon) {
  params.validate();
  if (!(lc > std::numbers::e * kMillion)) {
    throw DomainError("regression needs LC above e million EUR");
  }
  const double log_bic =
      params.intercept + params.slope * std::log(std::log(lc / kMillion)) + epsilon;
  return std::exp(log_bic) * kMillion;
}

Eur sample_bic(Eur expected_lc, const RegressionParams& params, RngStream& stream) {
  const double eps = params.resid_sd * stream.standard_normal();
  return bic_from_lc(expected_lc, params, eps);
}

Eur lc_quantile_given_bic(Eur bic, double q, const RegressionParams& params) {
  params.validate();
  if (!(q > 0.0 && q < 1.0)) throw InvalidInput("quantile level must lie in (0, 1)");
  if (!(bic > 0.0)) throw InvalidInput("BIC must be positive");
  const double z = normal::quantile(1.0 - q);
  const double log_log_lc =
      (std::log(bic / kMillion) - params.intercept - z * params.resid_sd) / params.slope;
  return std::exp(std::exp(log_log_lc)) * kMillion;
}

Eur median_bi_from_bic(Eur bic, const BicSchedule& schedule) {
  if (!(bic > 0.0)) throw InvalidInput("BIC must be positive");
  return schedule.bi(bic);
}

}  // namespace oprisk
