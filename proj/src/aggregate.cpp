#include "oprisk/aggregate.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <mutex>
#include <numeric>
#include <string>

#include "oprisk/errors.hpp"
#include "oprisk/normal.hpp"

namespace oprisk {

namespace {

// FFTW planning is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <class T>
FftwBuffer<T> fftw_alloc(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
  if (p == nullptr) throw std::bad_alloc();
  return FftwBuffer<T>(p);
}

class Plan {
 public:
  explicit Plan(fftw_plan p) : plan_(p) {
    if (plan_ == nullptr) throw Error("FFTW failed to create a plan");
  }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
  ~Plan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  void execute() const { fftw_execute(plan_); }

 private:
  fftw_plan plan_;
};

// Probability of each rounding cell [(k - 1/2) h, (k + 1/2) h), k < n. Mass
// beyond the last cell is left out; it shows up as aggregate overflow.
std::vector<double> round_severity(const SeverityModel& s, Eur h, std::size_t n) {
  // Body cells use cdf differences, tail cells use sf differences.
  const double median = std::exp(s.mu);
  std::vector<double> f(n);
  double prev_cdf = 0.0;
  double prev_sf = 1.0;
  bool tail = false;
  for (std::size_t k = 0; k < n; ++k) {
    const double lower = (static_cast<double>(k) - 0.5) * h;
    const double upper = lower + h;
    if (!tail && upper > median) {
      tail = true;
      prev_sf = trunc_sf(s, lower);
    }
    if (tail) {
      const double sf_hi = trunc_sf(s, upper);
      f[k] = prev_sf - sf_hi;
      prev_sf = sf_hi;
    } else {
      const double cdf_hi = trunc_cdf(s, upper);
      f[k] = cdf_hi - prev_cdf;
      prev_cdf = cdf_hi;
    }
  }
  return f;
}

// Share of E[X] carried by X <= x (lower) and X > x (upper), each computed
// directly so that differences keep their precision on both sides.
class MeanShares {
 public:
  explicit MeanShares(const SeverityModel& s)
      : s_(s), shifted_(s.mu + s.sigma * s.sigma), truncated_(s.truncation > 0.0) {
    if (truncated_) {
      const double zt = (std::log(s.truncation) - shifted_) / s.sigma;
      lower_at_t_ = normal::cdf(zt);
      total_ = normal::sf(zt);
    }
  }
  double lower(Eur x) const {
    if (x <= s_.truncation || x <= 0.0) return 0.0;
    return (normal::cdf(z(x)) - lower_at_t_) / total_;
  }
  double upper(Eur x) const {
    if (x <= s_.truncation || x <= 0.0) return 1.0;
    return normal::sf(z(x)) / total_;
  }
  Eur pivot() const { return std::exp(shifted_); }

 private:
  double z(Eur x) const { return (std::log(x) - shifted_) / s_.sigma; }
  SeverityModel s_;
  double shifted_;
  bool truncated_;
  double lower_at_t_ = 0.0;
  double total_ = 1.0;
};

// Local first-moment matching: the mass of each cell [k h, (k + 1) h) is split
// between its two end points so that the cell's mean is kept.
std::vector<double> mean_preserving_severity(const SeverityModel& s, Eur h, std::size_t n) {
  const MeanShares shares(s);
  const Eur mean = trunc_mean(s);
  const double median = std::exp(s.mu);
  std::vector<double> f(n, 0.0);
  double prev_cdf = 0.0;
  double prev_sf = 1.0;
  double prev_lower = 0.0;
  double prev_upper = 1.0;
  bool mass_tail = false;
  bool mean_tail = false;
  for (std::size_t k = 0; k < n; ++k) {
    const double a = static_cast<double>(k) * h;
    const double b = a + h;
    double m;
    if (!mass_tail && b > median) {
      mass_tail = true;
      prev_sf = trunc_sf(s, a);
    }
    if (mass_tail) {
      const double sf_b = trunc_sf(s, b);
      m = prev_sf - sf_b;
      prev_sf = sf_b;
    } else {
      const double cdf_b = trunc_cdf(s, b);
      m = cdf_b - prev_cdf;
      prev_cdf = cdf_b;
    }
    double share;
    if (!mean_tail && b > shares.pivot()) {
      mean_tail = true;
      prev_upper = shares.upper(a);
    }
    if (mean_tail) {
      const double u = shares.upper(b);
      share = prev_upper - u;
      prev_upper = u;
    } else {
      const double l = shares.lower(b);
      share = l - prev_lower;
      prev_lower = l;
    }
    const double moment = mean * share;  // E[X; a < X <= b]
    const double to_b = std::clamp((moment - a * m) / h, 0.0, m);
    f[k] += m - to_b;
    if (k + 1 < n) f[k + 1] += to_b;
  }
  return f;
}

std::vector<double> discretize_severity(const SeverityModel& s, Eur h, std::size_t n,
                                        Discretization method) {
  return method == Discretization::Rounding ? round_severity(s, h, n)
                                            : mean_preserving_severity(s, h, n);
}

AggregateDistribution aggregate_on_grid(const CompoundModel& model, Eur span,
                                        const DiscretizationConfig& cfg) {
  const std::size_t n = cfg.n_points;
  const std::size_t n_freq = n / 2 + 1;
  const Eur h = span / static_cast<double>(n);

  std::vector<double> sev = discretize_severity(model.severity, h, n, cfg.method);

  auto real = fftw_alloc<double>(n);
  auto spectrum = fftw_alloc<fftw_complex>(n_freq);
  std::unique_ptr<Plan> forward;
  std::unique_ptr<Plan> backward;
  {
    std::lock_guard lock(planner_mutex());
    forward = std::make_unique<Plan>(
        fftw_plan_dft_r2c_1d(static_cast<int>(n), real.get(), spectrum.get(), FFTW_ESTIMATE));
    backward = std::make_unique<Plan>(
        fftw_plan_dft_c2r_1d(static_cast<int>(n), spectrum.get(), real.get(), FFTW_ESTIMATE));
  }

  const double tilt_per_cell = cfg.tilt / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    real[k] = sev[k] * std::exp(-tilt_per_cell * static_cast<double>(k));
  }
  forward->execute();

  auto* z = reinterpret_cast<std::complex<double>*>(spectrum.get());
  for (std::size_t j = 0; j < n_freq; ++j) {
    z[j] = std::exp(model.lambda * (z[j] - 1.0));
  }
  backward->execute();

  std::vector<double> masses(n);
  const double norm = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double m = real[k] * norm * std::exp(tilt_per_cell * static_cast<double>(k));
    masses[k] = m > 0.0 ? m : 0.0;  // round-off negatives
  }

  const double total = std::accumulate(masses.begin(), masses.end(), 0.0);
  const double overflow = 1.0 - total;
  if (overflow > cfg.max_overflow) {
    throw ResolutionError("aggregate mass beyond span " + std::to_string(span) + " EUR is " +
                          std::to_string(overflow) + "; increase the span");
  }
  if (overflow > 0.0) {
    masses.back() += overflow;
  } else {
    for (double& m : masses) m /= total;
  }
  return AggregateDistribution(h, std::move(masses), model.lambda,
                               trunc_mean(model.severity), std::max(overflow, 0.0));
}

}  // namespace

void DiscretizationConfig::validate() const {
  if (n_points < (std::size_t{1} << 14) || !std::has_single_bit(n_points)) {
    throw InvalidInput("n_points must be a power of two >= 2^14");
  }
  if (n_points > static_cast<std::size_t>(std::numeric_limits<int>::max())) {
    throw InvalidInput("n_points too large");
  }
  if (!(span >= 0.0) || !(min_span >= 0.0)) throw InvalidInput("span must be >= 0");
  if (!(span_mult > 0.0)) throw InvalidInput("span_mult must be positive");
  if (!(span_quantile > 0.0 && span_quantile < 1.0)) {
    throw InvalidInput("span_quantile must lie in (0, 1)");
  }
  if (!(tilt >= 0.0)) throw InvalidInput("tilt must be >= 0");
  if (max_retries < 0) throw InvalidInput("max_retries must be >= 0");
  if (!(max_overflow > 0.0 && max_overflow < 1.0)) {
    throw InvalidInput("max_overflow must lie in (0, 1)");
  }
}

AggregateDistribution::AggregateDistribution(Eur grid_step, std::vector<double> masses,
                                             double lambda, Eur severity_mean,
                                             double overflow_mass)
    : grid_step_(grid_step),
      masses_(std::move(masses)),
      lambda_(lambda),
      severity_mean_(severity_mean),
      overflow_mass_(overflow_mass) {
  if (!(grid_step_ > 0.0)) throw InvalidInput("grid step must be positive");
  if (masses_.empty()) throw InvalidInput("empty mass vector");
  cumulative_.resize(masses_.size());
  std::partial_sum(masses_.begin(), masses_.end(), cumulative_.begin());
}

Eur AggregateDistribution::mean() const {
  double m = 0.0;
  for (std::size_t k = 0; k < masses_.size(); ++k) m += static_cast<double>(k) * masses_[k];
  return m * grid_step_;
}

double AggregateDistribution::mean_conservation_error() const {
  const double expected = lambda_ * severity_mean_;
  if (expected == 0.0) return std::abs(mean());
  return std::abs(mean() - expected) / expected;
}

Eur sla_span_estimate(const CompoundModel& model, double p) {
  const double q = (1.0 - p) / std::max(model.lambda, 1.0);
  return trunc_upper_quantile(model.severity, q) + expected_el(model);
}

AggregateDistribution aggregate_fft(const CompoundModel& model, const DiscretizationConfig& cfg) {
  model.validate();
  cfg.validate();
  Eur span = cfg.span > 0.0
                 ? cfg.span
                 : std::max(cfg.span_mult * sla_span_estimate(model, cfg.span_quantile),
                            cfg.min_span);
  for (int attempt = 0;; ++attempt) {
    try {
      return aggregate_on_grid(model, span, cfg);
    } catch (const ResolutionError&) {
      if (attempt >= cfg.max_retries) throw;
      span *= 4.0;
    }
  }
}

Eur var_quantile(const AggregateDistribution& agg, double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidInput("quantile level must lie in (0, 1)");
  const auto cum = agg.cumulative();
  const auto it = std::lower_bound(cum.begin(), cum.end(), p);
  const auto k = static_cast<std::size_t>(it - cum.begin());
  if (k + 1 >= cum.size()) {
    throw ResolutionError("quantile " + std::to_string(p) + " lies beyond the grid");
  }
  return static_cast<double>(k) * agg.grid_step();
}

double cdf_at(const AggregateDistribution& agg, Eur x) {
  if (!(x >= 0.0)) throw InvalidInput("cdf_at requires x >= 0");
  const auto cum = agg.cumulative();
  const double pos = x / agg.grid_step();
  if (pos >= static_cast<double>(cum.size() - 1)) return 1.0;
  const auto k = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(k);
  return cum[k] + frac * (cum[k + 1] - cum[k]);
}

double number_of_nines(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("probability must lie in [0, 1]");
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  return -std::log10(1.0 - p);
}

Eur sla_capital(const SeverityModel& fitted, double lambda_fitted, double p) {
  fitted.validate();
  if (!(p > 0.0 && p < 1.0)) throw InvalidInput("confidence level must lie in (0, 1)");
  if (!(lambda_fitted > 0.0)) throw UndefinedSla("SLA needs a positive frequency");
  const double tail = (1.0 - p) / lambda_fitted;
  if (tail >= 1.0) {
    throw UndefinedSla("SLA undefined: (1 - p) / lambda = " + std::to_string(tail) + " >= 1");
  }
  return trunc_upper_quantile(fitted, tail) + lambda_fitted * trunc_mean(fitted);
}

}  // namespace oprisk
