#include "oprisk/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <thread>

#include "oprisk/errors.hpp"

namespace oprisk {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Runs fn(i) for i in [0, n) on a pool of workers; the first exception is rethrown.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  unsigned workers = threads != 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);
}

std::vector<double> half_steps(double from, double to) {
  std::vector<double> v;
  for (int k = 0; from + 0.5 * k <= to + 1e-12; ++k) v.push_back(from + 0.5 * k);
  return v;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? kNaN : s / static_cast<double>(v.size());
}

}  // namespace

ConditionReport check_conditions(const CompoundModel& model, const StudySettings& settings,
                                 std::optional<Eur> ama_999) {
  model.validate();
  ConditionReport r;
  r.ama_999 = ama_999 ? *ama_999
                      : var_quantile(aggregate_fft(model, settings.discretization),
                                     kCapitalConfidence);
  r.cond_a = r.ama_999 > kAmaLowerBound && r.ama_999 < kAmaUpperBound;

  r.expected_lc = expected_lc(condition_on_floor(model, kCollectionFloor));
  r.cond_b = r.expected_lc > kExpectedLcLowerBound && r.expected_lc < kExpectedLcUpperBound;

  if (r.expected_lc > std::numbers::e * kMillion) {
    const Eur bic = bic_from_lc(r.expected_lc, settings.regression, 0.0);
    r.median_bi = median_bi_from_bic(bic, settings.schedule);
    const Eur threshold = std::max(kFrequencyThreshold, model.severity.truncation);
    r.freq_20k_per_bi_bn = frequency_above(model, threshold) / (r.median_bi / kBillion);
    r.cond_c = r.freq_20k_per_bi_bn > kMinFrequencyPerBiBn;
  } else {
    r.median_bi = kNaN;
    r.freq_20k_per_bi_bn = kNaN;
    r.cond_c = false;
  }
  return r;
}

ReplicationRecord run_replication(const CompoundModel& model, const StudySettings& settings,
                                  RngStream& stream, const ReplicationOptions& options) {
  model.validate();
  if (options.years < 1) throw InvalidInput("years must be at least 1");
  const SeverityModel& sev = model.severity;
  const Eur floor = std::max(options.floor, sev.truncation);
  auto& engine = stream.engine();

  // 3a: ten years of losses; only those at or above the floor are collected.
  std::vector<Eur> collected;
  std::lognormal_distribution<double> draw_lognormal(sev.mu, sev.sigma);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  auto draw = [&] {
    if (sev.truncation <= 0.0) return draw_lognormal(engine);
    double q = 1.0 - uniform(engine);
    if (q >= 1.0) q = std::nextafter(1.0, 0.0);
    return trunc_upper_quantile(sev, q);
  };
  if (model.lambda > 0.0) {
    std::poisson_distribution<long long> count(model.lambda);
    for (int y = 0; y < options.years; ++y) {
      const long long n = count(engine);
      for (long long i = 0; i < n; ++i) {
        const Eur x = draw();
        if (x >= floor) collected.push_back(x);
      }
    }
  }

  ReplicationRecord rec;
  rec.seed_path = stream.id();
  rec.n_losses = collected.size();
  // 3b
  rec.sim_lc = compute_lc(collected);
  // 3c
  rec.sampled_bic = options.fixed_bic
                        ? *options.fixed_bic
                        : sample_bic(expected_lc(condition_on_floor(model, floor)),
                                     settings.regression, stream);
  // 3d
  rec.bi = median_bi_from_bic(rec.sampled_bic, settings.schedule);
  rec.sma = compute_sma(rec.bi, rec.sampled_bic, rec.sim_lc);
  // 3e
  rec.sla = kNaN;
  try {
    rec.fit = fit_truncated_lognormal(collected, floor);
    rec.fit.lambda_hat = fit_poisson_rate(collected.size(), options.years);
    rec.sla = sla_capital(rec.fit.severity(floor), rec.fit.lambda_hat, options.confidence);
    rec.fit_status = "ok";
  } catch (const InsufficientData&) {
    rec.fit.n_obs = collected.size();
    rec.fit_status = "insufficient_data";
  } catch (const NonConvergence& e) {
    rec.fit = e.best();
    rec.fit_status = "non_convergence";
  } catch (const UndefinedSla&) {
    rec.fit_status = "sla_undefined";
  } catch (const DomainError&) {
    rec.fit.n_obs = collected.size();
    rec.fit_status = "degenerate";
  }
  if (rec.fit_status != "ok") rec.fit.lambda_hat = fit_poisson_rate(collected.size(), options.years);
  return rec;
}

GridSpec GridSpec::standard(std::uint64_t seed) {
  GridSpec g;
  g.mu_values = half_steps(8.0, 12.0);
  g.sigma_values = half_steps(1.0, 4.0);
  g.lambda_values = {100, 500, 1000, 5000, 10000};
  g.replications = 100;
  g.seed = seed;
  return g;
}

GridSpec GridSpec::smoke(std::uint64_t seed) {
  GridSpec g = standard(seed);
  g.lambda_values = {100, 1000};
  g.replications = 20;
  return g;
}

void GridSpec::validate() const {
  if (mu_values.empty() || sigma_values.empty() || lambda_values.empty()) {
    throw InvalidInput("grid lists must be non-empty");
  }
  if (replications < 2) throw InvalidInput("at least two replications are needed");
  for (double s : sigma_values) {
    if (!(s > 0.0)) throw InvalidInput("grid sigma values must be positive");
  }
  for (double l : lambda_values) {
    if (!(l > 0.0)) throw InvalidInput("grid lambda values must be positive");
  }
}

double coefficient_of_variation(const std::vector<double>& values) {
  if (values.size() < 2) return kNaN;
  const double m = mean_of(values);
  double ss = 0.0;
  for (double x : values) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1)) / m;
}

std::size_t GridStudyResult::passed_count() const {
  return static_cast<std::size_t>(
      std::count_if(combinations.begin(), combinations.end(), [](auto& c) { return c.passed(); }));
}

double GridStudyResult::share_sma_more_variable() const {
  std::size_t passed = 0;
  std::size_t more = 0;
  for (const auto& c : combinations) {
    if (!c.passed()) continue;
    ++passed;
    if (c.cov_sma > c.cov_sla) ++more;
  }
  return passed == 0 ? kNaN : static_cast<double>(more) / static_cast<double>(passed);
}

GridStudyResult grid_study(const GridSpec& spec, const StudySettings& settings) {
  spec.validate();
  GridStudyResult result;
  result.spec = spec;
  result.combinations.resize(spec.combinations());
  {
    std::size_t i = 0;
    for (double mu : spec.mu_values) {
      for (double sigma : spec.sigma_values) {
        for (double lambda : spec.lambda_values) {
          auto& c = result.combinations[i];
          c.index = i++;
          c.mu = mu;
          c.sigma = sigma;
          c.lambda = lambda;
        }
      }
    }
  }
  auto model_of = [](const CombinationResult& c) {
    return CompoundModel{SeverityModel{c.mu, c.sigma, 0.0}, c.lambda};
  };

  // Steps 1-2: screening on the known all-loss model.
  parallel_for(result.combinations.size(), settings.threads, [&](std::size_t i) {
    auto& c = result.combinations[i];
    const CompoundModel model = model_of(c);
    try {
      c.conditions = check_conditions(model, settings);
    } catch (const ResolutionError& e) {
      c.screening_error = e.what();
      c.conditions = check_conditions(model, settings, kNaN);
    }
  });

  // Step 3: replications of every passing combination.
  std::vector<std::size_t> passing;
  for (const auto& c : result.combinations) {
    if (c.passed()) passing.push_back(c.index);
  }
  std::vector<std::optional<Eur>> bank_bic(result.combinations.size());
  for (std::size_t idx : passing) {
    auto& c = result.combinations[idx];
    c.replications.resize(static_cast<std::size_t>(spec.replications));
    if (spec.bic_sampling == BicSampling::PerBank) {
      RngStream bank(spec.seed, {idx});
      bank_bic[idx] = sample_bic(c.conditions.expected_lc, settings.regression, bank);
    }
  }
  const auto reps = static_cast<std::size_t>(spec.replications);
  parallel_for(passing.size() * reps, settings.threads, [&](std::size_t task) {
    const std::size_t idx = passing[task / reps];
    const std::size_t r = task % reps;
    auto& c = result.combinations[idx];
    RngStream stream(spec.seed, {idx, r});
    ReplicationOptions opts;
    opts.fixed_bic = bank_bic[idx];
    c.replications[r] = run_replication(model_of(c), settings, stream, opts);
  });

  // Step 4: variability of SMA and SLA capital, reduced in index order.
  for (std::size_t idx : passing) {
    auto& c = result.combinations[idx];
    std::vector<double> sma;
    std::vector<double> sla;
    for (const auto& rec : c.replications) {
      sma.push_back(rec.sma);
      if (rec.sla_valid()) {
        sla.push_back(rec.sla);
      } else {
        ++c.failed_fits;
      }
    }
    c.mean_sma = mean_of(sma);
    c.cov_sma = coefficient_of_variation(sma);
    c.mean_sla = mean_of(sla);
    c.cov_sla = coefficient_of_variation(sla);
  }
  for (auto& c : result.combinations) {
    if (!c.passed()) c.mean_sma = c.cov_sma = c.mean_sla = c.cov_sla = kNaN;
  }
  return result;
}

std::vector<Table2Block> table2_standard_inputs() {
  const std::vector<std::pair<double, double>> small{{8, 2},   {9, 2.1}, {9, 2.6},
                                                     {10, 2.5}, {9, 3.1}, {10, 3.1}};
  const std::vector<std::pair<double, double>> large{{9, 2.1},  {10, 2},  {9, 2.6},
                                                     {10, 2.5}, {9, 3.1}, {10, 3.1}};
  return {{8.0 * kBillion, small}, {20.0 * kBillion, large}, {40.0 * kBillion, large}};
}

std::vector<Table2Row> table2_study(const std::vector<Table2Block>& blocks,
                                    const StudySettings& settings) {
  constexpr LcQuantile kQuantiles[] = {LcQuantile::Low, LcQuantile::Median, LcQuantile::High};
  std::vector<Table2Row> rows;
  for (const auto& block : blocks) {
    const Eur bic = compute_bic(block.bi, settings.schedule);
    for (const auto& [mu, sigma] : block.mu_sigma) {
      for (LcQuantile q : kQuantiles) {
        Table2Row row;
        row.bi = block.bi;
        row.bic = bic;
        row.mu = mu;
        row.sigma = sigma;
        row.quantile = q;
        rows.push_back(row);
      }
    }
  }

  parallel_for(rows.size(), settings.threads, [&](std::size_t i) {
    Table2Row& row = rows[i];
    const SeverityModel sev{row.mu, row.sigma, kCollectionFloor};
    row.lc = lc_quantile_given_bic(row.bic, quantile_level(row.quantile), settings.regression);
    row.alpha_star = alpha_star_analytic(sev);
    row.el = row.lc / row.alpha_star;
    row.lambda = lambda_from_el(sev, row.el);
    row.sma = compute_sma(row.bi, row.bic, row.lc);

    const CompoundModel model{sev, row.lambda};
    DiscretizationConfig cfg = settings.discretization;
    cfg.min_span = std::max(cfg.min_span, 1.5 * row.sma);  // F_A(SMA) must be on the grid
    const AggregateDistribution agg = aggregate_fft(model, cfg);
    row.span = agg.span();
    row.var999 = var_quantile(agg, kCapitalConfidence);
    row.sma_over_var = row.sma / row.var999;
    row.nines = number_of_nines(cdf_at(agg, row.sma));
    row.cond_c_pass = check_conditions(model, settings, row.var999).cond_c;
  });
  return rows;
}

double VarElFit::gap() const {
  if (groups.empty()) return kNaN;
  return groups.back().intercept - groups.front().intercept;
}

VarElFit var_el_regression(const std::vector<Table2Row>& rows) {
  struct Acc {
    double alpha = 0.0;
    std::vector<std::pair<double, double>> xy;
  };
  std::map<long, Acc> groups;
  for (const auto& r : rows) {
    if (!(r.el > 0.0) || !(r.var999 > 0.0)) throw InvalidInput("EL and VaR must be positive");
    const long key = std::lround(r.alpha_star * 10.0);
    auto& g = groups[key];
    g.alpha = static_cast<double>(key) / 10.0;
    g.xy.emplace_back(std::log(r.el), std::log(r.var999));
  }
  if (groups.empty()) throw InvalidInput("no rows to regress");

  double sxy = 0.0;
  double sxx = 0.0;
  std::vector<std::pair<double, double>> means;
  for (const auto& [key, g] : groups) {
    if (g.xy.size() < 2) throw InvalidInput("each alpha* group needs at least two rows");
    double mx = 0.0;
    double my = 0.0;
    for (auto [x, y] : g.xy) {
      mx += x;
      my += y;
    }
    mx /= static_cast<double>(g.xy.size());
    my /= static_cast<double>(g.xy.size());
    for (auto [x, y] : g.xy) {
      sxy += (x - mx) * (y - my);
      sxx += (x - mx) * (x - mx);
    }
    means.emplace_back(mx, my);
  }
  if (!(sxx > 0.0)) throw InvalidInput("singular design: EL does not vary within groups");

  VarElFit fit;
  fit.slope = sxy / sxx;
  std::size_t i = 0;
  for (const auto& [key, g] : groups) {
    const auto [mx, my] = means[i++];
    fit.groups.push_back({g.alpha, my - fit.slope * mx, g.xy.size()});
  }
  return fit;
}

}  // namespace oprisk
