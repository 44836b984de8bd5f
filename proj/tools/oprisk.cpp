#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "oprisk/commands.hpp"
#include "oprisk/errors.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> points;
  std::optional<double> span_mult;
  std::optional<std::string> discretization;
  std::optional<unsigned> threads;

  std::optional<std::string> losses;
  std::optional<std::string> profile;
  std::optional<double> bi;
  std::optional<int> window_years;
  std::optional<int> last_year;

  std::optional<double> mu;
  std::optional<double> sigma;
  std::optional<double> lambda;
  std::optional<double> truncation;
  std::optional<double> p;
  std::optional<double> capital;
  std::optional<std::string> dump_cdf;

  bool smoke = false;
  std::optional<int> replications;
  std::optional<std::string> bic_sampling;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "output directory (default $OPRISK_OUTPUT_DIR or ./out)");
  cmd->add_option("--seed", o.seed, "base seed");
  cmd->add_option("--points", o.points, "FFT grid size (power of two)");
  cmd->add_option("--span-mult", o.span_mult, "grid span as a multiple of the SLA estimate");
  cmd->add_option("--discretization", o.discretization, "severity discretization")
      ->check(CLI::IsMember({"mean_preserving", "rounding"}));
  cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)");
}

oprisk::RunConfig build_config(oprisk::Mode mode, const Overrides& o) {
  using namespace oprisk;
  RunConfig c;
  if (!o.config.empty()) {
    c = load_run_config(o.config);
  } else {
    c.output_dir = default_output_dir();
  }
  c.mode = mode;
  if (o.out) c.output_dir = *o.out;
  if (o.seed) c.seed = *o.seed;
  if (o.points) c.settings.discretization.n_points = *o.points;
  if (o.span_mult) c.settings.discretization.span_mult = *o.span_mult;
  if (o.discretization) {
    c.settings.discretization.method = parse_discretization(*o.discretization);
  }
  if (o.threads) c.settings.threads = *o.threads;

  if (o.losses) c.losses_path = *o.losses;
  if (o.profile) {
    c.profile_path = *o.profile;
    c.profile.reset();
  }
  if (o.bi) {
    c.profile = BankProfile::from_bi(*o.bi);
    c.profile_path.reset();
  }
  if (o.window_years) c.window_years = *o.window_years;
  if (o.last_year) c.last_year = *o.last_year;

  if (o.mu) c.lda.mu = *o.mu;
  if (o.sigma) c.lda.sigma = *o.sigma;
  if (o.lambda) c.lda.lambda = *o.lambda;
  if (o.truncation) c.lda.truncation = *o.truncation;
  if (o.p) c.lda.p = *o.p;
  if (o.capital) c.lda.capital = *o.capital;
  if (o.dump_cdf) c.lda.dump_cdf = *o.dump_cdf;

  if (o.smoke) {
    const GridSpec smoke = GridSpec::smoke(0);
    c.grid.lambda_values = smoke.lambda_values;
    c.grid.replications = smoke.replications;
    c.smoke = true;
  }
  if (o.replications) c.grid.replications = *o.replications;
  if (o.bic_sampling) {
    c.grid.bic_sampling =
        *o.bic_sampling == "per_bank" ? BicSampling::PerBank : BicSampling::PerReplication;
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Operational risk capital: SMA calculus, LDA aggregation and comparison studies"};
  app.require_subcommand(1);
  Overrides o;

  auto* sma = app.add_subcommand("sma", "SMA capital from a loss CSV and a bank profile");
  add_common(sma, o);
  sma->add_option("--losses", o.losses, "CSV with header year,amount_eur");
  auto* profile_opt = sma->add_option("--profile", o.profile, "JSON bank profile");
  sma->add_option("--bi", o.bi, "Business Indicator in EUR (instead of --profile)")
      ->excludes(profile_opt);
  sma->add_option("--window-years", o.window_years, "loss window length");
  sma->add_option("--last-year", o.last_year, "last year of the window");

  auto* lda = app.add_subcommand("lda", "annual loss quantile of a Poisson-lognormal model");
  add_common(lda, o);
  lda->add_option("--mu", o.mu);
  lda->add_option("--sigma", o.sigma);
  lda->add_option("--lambda", o.lambda, "annual frequency of losses above the truncation");
  lda->add_option("--truncation", o.truncation, "severity truncation in EUR (0 = none)");
  lda->add_option("--p", o.p, "quantile level");
  lda->add_option("--capital", o.capital, "report F(x) and #9's at this capital, EUR");
  lda->add_option("--dump-cdf", o.dump_cdf, "write the aggregate CDF to this CSV");

  auto* grid = app.add_subcommand("grid", "SMA vs SLA capital variability over a parameter grid");
  add_common(grid, o);
  grid->add_flag("--smoke", o.smoke, "lambda {100, 1000} and 20 replications");
  grid->add_option("--replications", o.replications);
  grid->add_option("--bic-sampling", o.bic_sampling)
      ->check(CLI::IsMember({"per_replication", "per_bank"}));

  auto* table2 = app.add_subcommand("table2", "SMA against the 99.9% VaR for 54 reference banks");
  add_common(table2, o);

  auto* curves = app.add_subcommand("curves", "SMA/EL and alpha* ratio curves");
  add_common(curves, o);

  CLI11_PARSE(app, argc, argv);

  using namespace oprisk;
  try {
    if (sma->parsed()) {
      cmd_sma(build_config(Mode::Sma, o), std::cout);
    } else if (lda->parsed()) {
      cmd_lda(build_config(Mode::Lda, o), std::cout);
    } else if (grid->parsed()) {
      cmd_grid(build_config(Mode::Grid, o), std::cout);
    } else if (table2->parsed()) {
      cmd_table2(build_config(Mode::Table2, o), std::cout);
    } else {
      cmd_curves(build_config(Mode::Curves, o), std::cout);
    }
  } catch (const ResolutionError& e) {
    std::cerr << "error: " << e.what()
              << "\nhint: raise --points or --span-mult\n";
    return 2;
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
