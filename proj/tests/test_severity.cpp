#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "oprisk/errors.hpp"
#include "oprisk/severity.hpp"
#include "oracles.hpp"

using namespace oprisk;
using doctest::Approx;

TEST_CASE("truncated mean against quadrature") {
  CHECK(trunc_mean({9, 2.1, 0}) == Approx(std::exp(9 + 2.1 * 2.1 / 2)).epsilon(1e-14));
  const double m = trunc_mean({9, 2.1, 10'000});
  CHECK(m == Approx(156'000).epsilon(0.01));
  for (double mu : {8.0, 9.0, 10.0, 12.0}) {
    for (double sigma : {1.0, 2.1, 3.1, 4.0}) {
      const double t = 10'000;
      const double expected =
          oracle::lognormal_partial_moment(mu, sigma, t) / oracle::lognormal_tail(mu, sigma, t);
      CHECK(trunc_mean({mu, sigma, t}) == Approx(expected).epsilon(1e-9));
    }
  }
}

TEST_CASE("truncated cdf and quantile") {
  const SeverityModel s{9, 2.1, 10'000};
  CHECK(trunc_cdf(s, 10'000) == 0.0);
  CHECK(trunc_cdf(s, 5'000) == 0.0);
  CHECK(trunc_cdf(s, 1e30) == Approx(1.0));
  CHECK(trunc_sf(s, 1e30) < 1e-40);
  for (double p : {1e-6, 0.01, 0.5, 0.9, 0.999, 1 - 1e-9}) {
    CHECK(trunc_cdf(s, trunc_quantile(s, p)) == Approx(p).epsilon(1e-10));
  }
  for (double q : {1e-3, 1e-9, 1e-30, 1e-200}) {
    CHECK(trunc_sf(s, trunc_upper_quantile(s, q)) == Approx(q).epsilon(1e-8));
  }
  CHECK_THROWS_AS(trunc_quantile(s, 0.0), InvalidInput);
  CHECK_THROWS_AS(trunc_quantile(s, 1.0), InvalidInput);
  CHECK_THROWS_AS(SeverityModel({9, 0.0, 0}).validate(), InvalidInput);
  CHECK_THROWS_AS(SeverityModel({9, 1.0, -1}).validate(), InvalidInput);
}

TEST_CASE("partial expectation fraction") {
  const SeverityModel s{9, 2.1, 10'000};
  CHECK(partial_expectation_fraction(s, 10'000) == Approx(1.0));
  CHECK(partial_expectation_fraction(s, 1e40) < 1e-12);
  CHECK_THROWS_AS(partial_expectation_fraction(s, 5'000), InvalidInput);

  const double f = partial_expectation_fraction(s, 10 * kMillion);
  CHECK(f == Approx(0.101).epsilon(0.01));

  // Monte Carlo with 1e7 draws from the truncated model.
  std::mt19937_64 rng(2024);
  std::lognormal_distribution<double> draw(9, 2.1);
  double total = 0.0;
  double above = 0.0;
  for (int i = 0; i < 10'000'000;) {
    const double x = draw(rng);
    if (x <= 10'000) continue;
    ++i;
    total += x;
    if (x > 10 * kMillion) above += x;
  }
  // Relative SE of a ratio of heavy-tailed sums is a few percent here.
  CHECK(above / total == Approx(f).epsilon(0.05));

  double prev = 1.0;
  for (double y = 10'000; y < 1e14; y *= 1.5) {
    const double v = partial_expectation_fraction(s, y);
    CHECK(v <= prev + 1e-15);
    prev = v;
  }
}

TEST_CASE("analytic alpha*") {
  CHECK(alpha_star_analytic({9, 2.1, 10'000}) == Approx(7.7).epsilon(0.05 / 7.7));
  CHECK(alpha_star_analytic({9, 2.6, 10'000}) == Approx(10.9).epsilon(0.05 / 10.9));
  CHECK(alpha_star_analytic({10, 3.1, 10'000}) == Approx(16.3).epsilon(0.05 / 16.3));
  for (double mu = 8; mu <= 12; mu += 0.5) {
    double prev = 7.0;
    for (double sigma = 1; sigma <= 4; sigma += 0.25) {
      const double a = alpha_star_analytic({mu, sigma, 10'000});
      CHECK(a >= 7.0);
      CHECK(a <= 19.0);
      CHECK(a >= prev - 1e-12);
      prev = a;
    }
  }
}

TEST_CASE("empirical alpha* converges to the analytic value") {
  const SeverityModel s{12, 2.0, 10'000};
  std::mt19937_64 rng(99);
  std::lognormal_distribution<double> draw(s.mu, s.sigma);
  // Batch means give a standard error for the ratio estimator.
  constexpr int kBatches = 50;
  constexpr int kPerBatch = 40'000;
  std::vector<double> batch;
  for (int b = 0; b < kBatches; ++b) {
    double sum = 0, s10 = 0, s100 = 0;
    for (int i = 0; i < kPerBatch;) {
      const double x = draw(rng);
      if (x <= s.truncation) continue;
      ++i;
      sum += x;
      if (x > 10 * kMillion) s10 += x;
      if (x > 100 * kMillion) s100 += x;
    }
    batch.push_back(7 + 7 * s10 / sum + 5 * s100 / sum);
  }
  double mean = 0;
  for (double v : batch) mean += v;
  mean /= kBatches;
  double var = 0;
  for (double v : batch) var += (v - mean) * (v - mean);
  const double se = std::sqrt(var / (kBatches - 1) / kBatches);
  CHECK(std::abs(mean - alpha_star_analytic(s)) < 3 * se + 1e-3);
}

TEST_CASE("expected LC and lambda") {
  const SeverityModel s{9, 2.1, 10'000};
  const CompoundModel m{s, 323};
  CHECK(expected_lc(m) / kBillion == Approx(0.390).epsilon(0.01));
  CHECK(expected_lc({s, 646}) == Approx(2 * expected_lc(m)).epsilon(1e-14));
  CHECK(expected_lc({{9, 2.6, 10'000}, 857}) / kBillion == Approx(4.728).epsilon(0.01));
  CHECK(expected_lc(m) / (m.lambda * trunc_mean(s)) == Approx(alpha_star_analytic(s)).epsilon(1e-12));

  CHECK(lambda_from_el(s, trunc_mean(s)) == Approx(1.0).epsilon(1e-14));
  CHECK(lambda_from_el(s, 0.050 * kBillion) == Approx(323).epsilon(0.01));
  CHECK(lambda_from_el({10, 3.1, 10'000}, 0.415 * kBillion) == Approx(93).epsilon(0.01));
  for (double el : {1e6, 3.7e8, 2e10}) {
    CHECK(expected_el({s, lambda_from_el(s, el)}) == Approx(el).epsilon(1e-9));
  }
  CHECK_THROWS_AS(lambda_from_el(s, 0.0), InvalidInput);
}

TEST_CASE("frequency above a threshold") {
  const CompoundModel m{{8, 2, 0}, 1000};
  CHECK(frequency_above({{9, 2, 10'000}, 50}, 10'000) == Approx(50));
  CHECK(frequency_above(m, 1e40) < 1e-12);
  const double closed = 1000 * 0.5 * std::erfc((std::log(2e4) - 8) / 2 / std::sqrt(2.0));
  CHECK(frequency_above(m, 20'000) == Approx(closed).epsilon(1e-12));
  CHECK_THROWS_AS(frequency_above({{9, 2, 10'000}, 50}, 5'000), InvalidInput);

  std::mt19937_64 rng(5);
  std::poisson_distribution<int> count(1000);
  std::lognormal_distribution<double> draw(8, 2);
  constexpr int kYears = 4000;
  long long hits = 0;
  for (int y = 0; y < kYears; ++y) {
    const int n = count(rng);
    for (int i = 0; i < n; ++i) hits += draw(rng) > 20'000 ? 1 : 0;
  }
  const double rate = static_cast<double>(hits) / kYears;
  CHECK(std::abs(rate - closed) < 3 * std::sqrt(closed / kYears));
}

TEST_CASE("conditioning on the collection floor") {
  const CompoundModel all{{9, 2, 0}, 1000};
  const CompoundModel c = condition_on_floor(all, 10'000);
  CHECK(c.severity.truncation == 10'000);
  CHECK(c.lambda == Approx(frequency_above(all, 10'000)));
  CHECK(frequency_above(c, 50'000) == Approx(frequency_above(all, 50'000)).epsilon(1e-12));
}
