#pragma once

// Annual aggregate loss distribution of a compound Poisson-lognormal model,
// computed by FFT on a regular grid, and the capital measures derived from it.

#include <cstddef>
#include <span>
#include <vector>

#include "oprisk/severity.hpp"

namespace oprisk {

/// How the severity is put on the grid: all of a cell's mass at its nearest
/// grid point, or split between the cell's end points so its mean is kept.
enum class Discretization { Rounding, MeanPreserving };

struct DiscretizationConfig {
  /// Grid size; a power of two, at least 2^14.
  std::size_t n_points = std::size_t{1} << 20;
  /// Grid upper bound in EUR. 0 selects span_mult times the SLA estimate of
  /// the `span_quantile` quantile.
  Eur span = 0.0;
  /// Lower bound for an automatically chosen span.
  Eur min_span = 0.0;
  double span_mult = 8.0;
  double span_quantile = 0.999;
  /// Exponential tilting strength, expressed as theta * span.
  double tilt = 10.0;
  /// Each resolution failure multiplies the span by 4, at most this many times.
  int max_retries = 4;
  Discretization method = Discretization::MeanPreserving;
  /// Largest probability allowed to fall beyond the grid.
  double max_overflow = 1e-6;

  void validate() const;
};

/// Discrete annual-loss distribution on {0, h, 2h, ...}. The probability that
/// the total lands beyond the grid is folded into the last cell. Immutable.
class AggregateDistribution {
 public:
  AggregateDistribution(Eur grid_step, std::vector<double> masses, double lambda,
                        Eur severity_mean, double overflow_mass);

  Eur grid_step() const { return grid_step_; }
  Eur span() const { return grid_step_ * static_cast<double>(masses_.size()); }
  std::span<const double> masses() const { return masses_; }
  /// P(total <= k h) for each grid index k.
  std::span<const double> cumulative() const { return cumulative_; }
  double lambda() const { return lambda_; }
  Eur severity_mean() const { return severity_mean_; }
  /// Probability mass that fell beyond the grid before folding.
  double overflow_mass() const { return overflow_mass_; }

  Eur mean() const;
  /// |mean - lambda severity_mean| / (lambda severity_mean).
  double mean_conservation_error() const;

 private:
  Eur grid_step_;
  std::vector<double> masses_;
  std::vector<double> cumulative_;
  double lambda_;
  Eur severity_mean_;
  double overflow_mass_;
};

/// Rough upper quantile used to size the grid: SLA at level p, falling back
/// to a one-loss quantile when lambda is too small for the SLA.
Eur sla_span_estimate(const CompoundModel& model, double p);

/// Aggregates `model` by FFT with the configured discretization and exponential
/// tilting. Throws ResolutionError when more than cfg.max_overflow of the
/// probability still lands beyond the grid after all retries.
AggregateDistribution aggregate_fft(const CompoundModel& model,
                                    const DiscretizationConfig& cfg = {});

/// Smallest grid point x with P(total <= x) >= p. Throws ResolutionError if
/// that point is the overflow cell.
Eur var_quantile(const AggregateDistribution& agg, double p);

/// P(total <= x), linear between grid points; 1 beyond the grid.
double cdf_at(const AggregateDistribution& agg, Eur x);

/// -log10(1 - p); +infinity for p == 1.
double number_of_nines(double p);

/// F^-1(1 - (1 - p) / lambda) + lambda * mean(F) for the fitted severity F.
/// Throws UndefinedSla when (1 - p) / lambda >= 1.
Eur sla_capital(const SeverityModel& fitted, double lambda_fitted, double p);

}  // namespace oprisk
