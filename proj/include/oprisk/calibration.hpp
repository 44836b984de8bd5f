#pragma once

// Maximum-likelihood fit of a left-truncated lognormal severity and a
// Poisson frequency to collected loss data.

#include <array>
#include <cstddef>
#include <span>

#include "oprisk/errors.hpp"
#include "oprisk/severity.hpp"

namespace oprisk {

struct FitResult {
  double mu_hat = 0.0;
  double sigma_hat = 0.0;
  /// Filled by callers that also fit the frequency.
  double lambda_hat = 0.0;
  std::size_t n_obs = 0;
  bool converged = false;
  double log_likelihood = 0.0;
  /// Max-norm gradient of the per-observation log-likelihood in (mu, ln sigma).
  double gradient_norm = 0.0;
  int iterations = 0;

  SeverityModel severity(Eur truncation) const { return {mu_hat, sigma_hat, truncation}; }
};

/// Raised when no start converges; carries the best iterate found.
class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, FitResult best) : Error(what), best_(best) {}
  const FitResult& best() const { return best_; }

 private:
  FitResult best_;
};

/// Log-likelihood of the left-truncated lognormal, evaluated from the
/// sufficient statistics of the log-amounts.
class TruncatedLognormalLikelihood {
 public:
  /// Requires every amount >= truncation and > 0.
  TruncatedLognormalLikelihood(std::span<const Eur> amounts, Eur truncation);

  std::size_t size() const { return n_; }
  double log_mean() const { return log_mean_; }
  /// Biased (1/n) standard deviation of the log-amounts.
  double log_sd() const;

  /// Total log-likelihood (including the -ln x Jacobian).
  double value(double mu, double sigma) const;
  /// d value / d(mu, sigma).
  std::array<double, 2> gradient(double mu, double sigma) const;

 private:
  std::size_t n_ = 0;
  double log_mean_ = 0.0;
  double centered_ss_ = 0.0;  // sum (ln x - log_mean)^2
  double log_sum_ = 0.0;
  double log_truncation_ = 0.0;
  bool truncated_ = false;
};

inline constexpr std::size_t kMinFitObservations = 10;
inline constexpr double kFitGradientTolerance = 1e-8;

/// Quasi-Newton (BFGS) maximization in (mu, ln sigma) from a moment start on
/// the log-data, retried from three perturbed starts.
///
/// Throws InsufficientData below kMinFitObservations, InvalidInput for
/// amounts below the truncation, DomainError when the log-amounts have no
/// spread, and NonConvergence when every start fails the gradient test.
FitResult fit_truncated_lognormal(std::span<const Eur> amounts, Eur truncation);

/// n_obs / years.
double fit_poisson_rate(std::size_t n_obs, double years);

}  // namespace oprisk
