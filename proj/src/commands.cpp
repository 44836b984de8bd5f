#include "oprisk/commands.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "oprisk/errors.hpp"

namespace oprisk {

namespace {

nlohmann::ordered_json base_metadata(const RunConfig& config, Mode mode) {
  nlohmann::ordered_json meta;
  meta["command"] = to_string(mode);
  if (config.seed) {
    meta["seed"] = *config.seed;
  } else {
    meta["seed"] = nullptr;
  }
  const auto settings = settings_metadata(config.settings);
  for (const auto& [key, value] : settings.items()) meta[key] = value;
  return meta;
}

const char* to_string(BicSampling s) {
  return s == BicSampling::PerBank ? "per_bank" : "per_replication";
}

}  // namespace

SmaRun cmd_sma(const RunConfig& config, std::ostream& out) {
  config.require(Mode::Sma);
  const BankProfile profile = config.profile ? *config.profile : load_bank_profile(*config.profile_path);
  std::vector<LossEvent> events = read_loss_csv(*config.losses_path);

  SmaRun run;
  run.events_read = events.size();
  std::optional<int> last_year = config.last_year;
  if (!last_year && !events.empty()) {
    last_year = std::max_element(events.begin(), events.end(), [](auto& a, auto& b) {
                  return a.year < b.year;
                })->year;
  }
  if (last_year) {
    const int first = *last_year - config.window_years + 1;
    const auto outside = std::remove_if(events.begin(), events.end(), [&](const LossEvent& e) {
      return e.year < first || e.year > *last_year;
    });
    run.outside_window = static_cast<std::size_t>(events.end() - outside);
    events.erase(outside, events.end());
  }
  const LossHistory history(std::move(events), config.window_years, last_year);
  run.below_floor = history.dropped_below_floor();
  run.breakdown = sma_breakdown(profile, history, config.settings.schedule);

  write_sma_csv(config.output_dir / "sma.csv", run.breakdown);
  auto meta = base_metadata(config, Mode::Sma);
  meta["losses"] = config.losses_path->string();
  meta["window"] = {{"first_year", history.first_year()},
                    {"last_year", history.last_year()},
                    {"years", history.window_years()}};
  meta["events_read"] = run.events_read;
  meta["events_outside_window"] = run.outside_window;
  meta["events_below_floor"] = run.below_floor;
  write_metadata(config.output_dir / "metadata.json", meta);

  const auto& b = run.breakdown;
  fmt::print(out, "BI         {:>10} bn\n", format_bn(b.bi));
  fmt::print(out, "BIC        {:>10} bn\n", format_bn(b.bic));
  fmt::print(out, "LC         {:>10} bn\n", format_bn(b.lc));
  fmt::print(out, "alpha*     {:>10}\n", b.alpha_star ? fmt::format("{:.2f}", *b.alpha_star) : "n/a");
  fmt::print(out, "EL         {:>10} bn\n", format_bn(b.el));
  fmt::print(out, "SMA        {:>10} bn\n", format_bn(b.sma));
  if (run.outside_window > 0) {
    fmt::print(out, "note: {} events outside {}-{} ignored\n", run.outside_window,
               history.first_year(), history.last_year());
  }
  if (run.below_floor > 0) {
    fmt::print(out, "note: {} events below {:.0f} EUR ignored\n", run.below_floor, kCollectionFloor);
  }
  if (b.short_window) fmt::print(out, "note: window shorter than {} years\n", kLcWindowYears);
  return run;
}

LdaRun cmd_lda(const RunConfig& config, std::ostream& out) {
  config.require(Mode::Lda);
  const auto& p = config.lda;
  const CompoundModel model{{p.mu, p.sigma, p.truncation}, p.lambda};
  const AggregateDistribution agg = aggregate_fft(model, config.settings.discretization);

  LdaRun run;
  run.var = var_quantile(agg, p.p);
  run.mean = agg.mean();
  run.span = agg.span();
  try {
    run.sla = sla_capital(model.severity, model.lambda, p.p);
  } catch (const UndefinedSla&) {
    run.sla = std::numeric_limits<double>::quiet_NaN();
  }
  if (p.capital) {
    run.cdf_at_capital = cdf_at(agg, *p.capital);
    run.nines = number_of_nines(*run.cdf_at_capital);
  }
  if (p.dump_cdf) write_cdf_csv(*p.dump_cdf, agg);

  auto meta = base_metadata(config, Mode::Lda);
  meta["model"] = {{"mu", p.mu}, {"sigma", p.sigma}, {"lambda", p.lambda},
                   {"truncation", p.truncation}, {"p", p.p}};
  meta["result"] = {{"var_eur", run.var},         {"sla_eur", run.sla},
                    {"mean_eur", run.mean},       {"span_eur", run.span},
                    {"grid_step_eur", agg.grid_step()},
                    {"overflow_mass", agg.overflow_mass()},
                    {"mean_conservation_error", agg.mean_conservation_error()}};
  if (p.capital) {
    meta["result"]["capital_eur"] = *p.capital;
    meta["result"]["cdf_at_capital"] = *run.cdf_at_capital;
    meta["result"]["nines"] = *run.nines;
  }
  write_metadata(config.output_dir / "metadata.json", meta);

  fmt::print(out, "VaR({}) {:>10} bn\n", p.p, format_bn(run.var));
  fmt::print(out, "SLA        {:>10} bn\n", std::isnan(run.sla) ? "n/a" : format_bn(run.sla));
  fmt::print(out, "mean       {:>10} bn\n", format_bn(run.mean));
  if (p.capital) {
    fmt::print(out, "F({} bn) = {:.9f}, #9's = {:.2f}\n", format_bn(*p.capital), *run.cdf_at_capital,
               *run.nines);
  }
  return run;
}

GridStudyResult cmd_grid(const RunConfig& config, std::ostream& out) {
  config.require(Mode::Grid);
  GridSpec spec = config.grid;
  spec.seed = *config.seed;
  GridStudyResult result = grid_study(spec, config.settings);

  write_grid_combinations_csv(config.output_dir / "grid_combinations.csv", result);
  write_grid_replications_csv(config.output_dir / "grid_replications.csv", result);
  write_fig6_csv(config.output_dir / "fig6.csv", result);

  std::size_t screening_errors = 0;
  std::size_t failed_fits = 0;
  for (const auto& c : result.combinations) {
    if (!c.screening_error.empty()) ++screening_errors;
    failed_fits += c.failed_fits;
  }
  auto meta = base_metadata(config, Mode::Grid);
  meta["grid"] = {{"mu_values", spec.mu_values},
                  {"sigma_values", spec.sigma_values},
                  {"lambda_values", spec.lambda_values},
                  {"replications", spec.replications},
                  {"bic_sampling", to_string(spec.bic_sampling)},
                  {"simulation_years", kSimulationYears}};
  meta["result"] = {{"combinations", result.combinations.size()},
                    {"passed", result.passed_count()},
                    {"screening_errors", screening_errors},
                    {"failed_fits", failed_fits},
                    {"share_cov_sma_above_cov_sla", result.share_sma_more_variable()}};
  write_metadata(config.output_dir / "metadata.json", meta);

  fmt::print(out, "combinations screened  {}\n", result.combinations.size());
  fmt::print(out, "passing A, B and C     {}\n", result.passed_count());
  fmt::print(out, "CoV(SMA) > CoV(SLA)    {:.1f}% of passing\n",
             100.0 * result.share_sma_more_variable());
  if (screening_errors > 0) fmt::print(out, "screening errors       {}\n", screening_errors);
  if (failed_fits > 0) fmt::print(out, "failed fits            {}\n", failed_fits);
  return result;
}

std::vector<Table2Row> cmd_table2(const RunConfig& config, std::ostream& out) {
  config.require(Mode::Table2);
  const auto rows = table2_study(table2_standard_inputs(), config.settings);
  const VarElFit fit = var_el_regression(rows);

  write_table2_csv(config.output_dir / "table2.csv", rows);
  write_fig7_csv(config.output_dir / "fig7.csv", rows);
  write_fig8_csv(config.output_dir / "fig8.csv", rows, fit);
  write_fig8_lines_csv(config.output_dir / "fig8_lines.csv", fit);

  auto meta = base_metadata(config, Mode::Table2);
  meta["result"] = {{"rows", rows.size()}, {"fig8_slope", fit.slope}, {"fig8_gap", fit.gap()}};
  write_metadata(config.output_dir / "metadata.json", meta);

  fmt::print(out, "{:>5} {:>4} {:>4} {:>7} {:>8} {:>6} {:>8} {:>8} {:>6}\n", "BI", "mu", "sigma",
             "LCq", "lambda", "alpha*", "SMA", "VaR", "#9's");
  for (const auto& r : rows) {
    fmt::print(out, "{:>5.0f} {:>4} {:>4} {:>7} {:>8.0f} {:>6.1f} {:>8} {:>8} {:>6.1f}\n",
               r.bi / kBillion, r.mu, r.sigma, to_string(r.quantile), r.lambda, r.alpha_star,
               format_bn(r.sma), format_bn(r.var999), r.nines);
  }
  fmt::print(out, "ln VaR on ln EL: slope {:.3f}, intercept gap {:.3f}\n", fit.slope, fit.gap());
  return rows;
}

void cmd_curves(const RunConfig& config, std::ostream& out) {
  config.require(Mode::Curves);
  write_fig2_csv(config.output_dir / "fig2.csv");
  write_fig3_csv(config.output_dir / "fig3.csv");
  auto meta = base_metadata(config, Mode::Curves);
  meta["curves"] = {{"fig2", "SMA/EL vs LC/BIC, large-bank asymptote"},
                    {"fig3", "SMA(alpha*=19)/SMA(alpha*=7) vs EL/BIC, large-bank asymptote"}};
  write_metadata(config.output_dir / "metadata.json", meta);
  fmt::print(out, "wrote {} and {}\n", (config.output_dir / "fig2.csv").string(),
             (config.output_dir / "fig3.csv").string());
}

}  // namespace oprisk
