#include "oprisk/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "oprisk/normal.hpp"

namespace oprisk {

namespace {

const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

// Negative per-observation log-likelihood in (mu, eta = ln sigma).
struct Objective {
  const TruncatedLognormalLikelihood& ll;

  double value(const std::array<double, 2>& x) const {
    return -ll.value(x[0], std::exp(x[1])) / static_cast<double>(ll.size());
  }

  std::array<double, 2> gradient(const std::array<double, 2>& x) const {
    const double sigma = std::exp(x[1]);
    const auto g = ll.gradient(x[0], sigma);
    const double n = static_cast<double>(ll.size());
    return {-g[0] / n, -sigma * g[1] / n};
  }
};

double max_norm(const std::array<double, 2>& v) { return std::max(std::abs(v[0]), std::abs(v[1])); }
double dot(const std::array<double, 2>& a, const std::array<double, 2>& b) {
  return a[0] * b[0] + a[1] * b[1];
}

constexpr double kTightTolerance = 1e-11;
constexpr int kMaxIterations = 500;

FitResult bfgs(const TruncatedLognormalLikelihood& ll, std::array<double, 2> x) {
  const Objective obj{ll};
  double f = obj.value(x);
  auto g = obj.gradient(x);

  // Inverse-Hessian seed from the untruncated curvature: diag(sigma^2, 1/2).
  auto seed = [&](const std::array<double, 2>& at) {
    const double s2 = std::exp(2.0 * at[1]);
    return std::array<double, 4>{s2, 0.0, 0.0, 0.5};
  };
  std::array<double, 4> h = seed(x);  // row-major 2x2

  int iter = 0;
  for (; iter < kMaxIterations && std::isfinite(f); ++iter) {
    if (max_norm(g) < kTightTolerance) break;
    std::array<double, 2> p{-(h[0] * g[0] + h[1] * g[1]), -(h[2] * g[0] + h[3] * g[1])};
    double slope = dot(g, p);
    if (!(slope < 0.0)) {
      h = seed(x);
      p = {-h[0] * g[0], -h[3] * g[1]};
      slope = dot(g, p);
    }

    bool accepted = false;
    std::array<double, 2> x_new{};
    std::array<double, 2> g_new{};
    double f_new = f;
    for (double t = 1.0; t > 1e-16; t *= 0.5) {
      x_new = {x[0] + t * p[0], x[1] + t * p[1]};
      f_new = obj.value(x_new);
      if (!std::isfinite(f_new)) continue;
      if (f_new <= f + 1e-4 * t * slope) {
        g_new = obj.gradient(x_new);
        accepted = true;
        break;
      }
      // At the optimum f stops resolving; accept steps that still shrink the gradient.
      if (std::abs(f_new - f) <= 1e-14 * std::max(1.0, std::abs(f))) {
        g_new = obj.gradient(x_new);
        if (max_norm(g_new) < max_norm(g)) {
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) break;

    const std::array<double, 2> s{x_new[0] - x[0], x_new[1] - x[1]};
    const std::array<double, 2> y{g_new[0] - g[0], g_new[1] - g[1]};
    const double sy = dot(s, y);
    if (sy > 1e-300) {
      // H+ = (I - rho s y') H (I - rho y s') + rho s s'
      const double rho = 1.0 / sy;
      const std::array<double, 2> hy{h[0] * y[0] + h[1] * y[1], h[2] * y[0] + h[3] * y[1]};
      const double yhy = dot(y, hy);
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
          h[2 * i + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
      }
    }
    x = x_new;
    f = f_new;
    g = g_new;
  }

  FitResult r;
  r.mu_hat = x[0];
  r.sigma_hat = std::exp(x[1]);
  r.n_obs = ll.size();
  r.log_likelihood = std::isfinite(f) ? -f * static_cast<double>(ll.size())
                                      : -std::numeric_limits<double>::infinity();
  r.gradient_norm = max_norm(g);
  r.iterations = iter;
  r.converged = std::isfinite(f) && r.gradient_norm < kFitGradientTolerance;
  return r;
}

}  // namespace

TruncatedLognormalLikelihood::TruncatedLognormalLikelihood(std::span<const Eur> amounts,
                                                           Eur truncation)
    : n_(amounts.size()), truncated_(truncation > 0.0) {
  if (!(truncation >= 0.0)) throw InvalidInput("truncation must be >= 0");
  if (n_ == 0) throw InsufficientData("no observations");
  for (Eur x : amounts) {
    if (!(x > 0.0) || !(x >= truncation) || !std::isfinite(x)) {
      throw InvalidInput("observation " + std::to_string(x) + " is not above the truncation " +
                         std::to_string(truncation));
    }
    log_sum_ += std::log(x);
  }
  log_mean_ = log_sum_ / static_cast<double>(n_);
  for (Eur x : amounts) {
    const double d = std::log(x) - log_mean_;
    centered_ss_ += d * d;
  }
  if (truncated_) log_truncation_ = std::log(truncation);
}

double TruncatedLognormalLikelihood::log_sd() const {
  return std::sqrt(centered_ss_ / static_cast<double>(n_));
}

double TruncatedLognormalLikelihood::value(double mu, double sigma) const {
  const double n = static_cast<double>(n_);
  const double d = log_mean_ - mu;
  const double ss = centered_ss_ + n * d * d;
  double ll = -log_sum_ - n * std::log(sigma) - n * kLogSqrt2Pi - ss / (2.0 * sigma * sigma);
  if (truncated_) ll -= n * normal::log_sf((log_truncation_ - mu) / sigma);
  return ll;
}

std::array<double, 2> TruncatedLognormalLikelihood::gradient(double mu, double sigma) const {
  const double n = static_cast<double>(n_);
  const double d = log_mean_ - mu;
  const double ss = centered_ss_ + n * d * d;
  double d_mu = n * d / (sigma * sigma);
  double d_sigma = -n / sigma + ss / (sigma * sigma * sigma);
  if (truncated_) {
    const double zt = (log_truncation_ - mu) / sigma;
    const double hz = normal::hazard(zt);
    d_mu -= n * hz / sigma;
    d_sigma -= n * hz * zt / sigma;
  }
  return {d_mu, d_sigma};
}

FitResult fit_truncated_lognormal(std::span<const Eur> amounts, Eur truncation) {
  if (amounts.size() < kMinFitObservations) {
    throw InsufficientData("need at least " + std::to_string(kMinFitObservations) +
                           " observations, got " + std::to_string(amounts.size()));
  }
  const TruncatedLognormalLikelihood ll(amounts, truncation);
  const double m = ll.log_mean();
  const double sd = ll.log_sd();
  if (!(sd > 1e-12 * std::max(1.0, std::abs(m)))) {
    throw DomainError("log-amounts have no spread; sigma is not identifiable");
  }
  const double eta = std::log(sd);
  const std::array<std::array<double, 2>, 4> starts{{
      {m, eta},
      {m - sd, eta + std::log(1.5)},
      {m + 0.5 * sd, eta - std::log(1.5)},
      {m - 2.0 * sd, eta + std::log(2.0)},
  }};

  FitResult best;
  bool have_best = false;
  for (const auto& start : starts) {
    FitResult r = bfgs(ll, start);
    if (r.converged) return r;
    if (!have_best || r.log_likelihood > best.log_likelihood) {
      best = r;
      have_best = true;
    }
  }
  throw NonConvergence("truncated lognormal fit did not converge (gradient " +
                           std::to_string(best.gradient_norm) + ")",
                       best);
}

double fit_poisson_rate(std::size_t n_obs, double years) {
  if (!(years > 0.0)) throw InvalidInput("years must be positive");
  return static_cast<double>(n_obs) / years;
}

}  // namespace oprisk
