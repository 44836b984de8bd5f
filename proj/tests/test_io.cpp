#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "oprisk/commands.hpp"
#include "oprisk/errors.hpp"
#include "oprisk/io.hpp"

using namespace oprisk;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("oprisk_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::size_t error_line(const std::string& csv) {
  std::istringstream in(csv);
  try {
    read_loss_csv(in);
  } catch (const IngestionError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_CASE("loss CSV ingestion") {
  std::istringstream ok("year,amount_eur\n2015,12000.5\r\n\n2016, 3000000\n");
  const auto events = read_loss_csv(ok);
  REQUIRE(events.size() == 2);
  CHECK(events[0].year == 2015);
  CHECK(events[0].amount == 12000.5);
  CHECK(events[1].amount == 3e6);

  std::istringstream bom("\xEF\xBB\xBFyear,amount_eur\n2015,20000\n");
  CHECK(read_loss_csv(bom).size() == 1);

  CHECK(error_line("year,amount_eur\n2015,100\n2016,-5\n") == 3);
  CHECK(error_line("year,amount_eur\n2015,0\n") == 2);
  CHECK(error_line("year,amount_eur\n2015,abc\n") == 2);
  CHECK(error_line("year,amount_eur\n2015,1e6\n") == 2);
  CHECK(error_line("year,amount_eur\n20x5,100\n") == 2);
  CHECK(error_line("year,amount_eur\n2015,100,7\n") == 2);
  CHECK(error_line("amount,year\n") == 1);
  CHECK(error_line("") == 1);

  std::istringstream neg("year,amount_eur\n2016,-5\n");
  CHECK_THROWS_WITH_AS(read_loss_csv(neg), doctest::Contains("line 2"), InvalidInput);
}

TEST_CASE("bank profiles") {
  const auto p = parse_bank_profile(nlohmann::json{{"ildc_avg", 3e9}, {"sc_avg", 4e9}, {"fc_avg", 1e9}});
  CHECK(compute_bi(p) == 8e9);
  CHECK(compute_bi(parse_bank_profile(nlohmann::json{{"bi_direct", 2e10}})) == 2e10);
  CHECK_THROWS_AS(parse_bank_profile(nlohmann::json{{"bi_direct", 1e9}, {"sc_avg", 1.0}}), InvalidInput);
  CHECK_THROWS_AS(parse_bank_profile(nlohmann::json{{"ildc_avg", 1e9}}), InvalidInput);
  CHECK_THROWS_AS(parse_bank_profile(nlohmann::json{{"bi_direct", -1}}), InvalidInput);
  CHECK_THROWS_AS(parse_bank_profile(nlohmann::json{{"bi_direct", "x"}}), InvalidInput);
}

TEST_CASE("run config") {
  const auto j = nlohmann::json::parse(R"({
    "mode": "grid", "seed": 9, "output_dir": "o", "threads": 2,
    "discretization": {"n_points": 524288, "span_mult": 6},
    "regression": {"intercept": -2.0},
    "grid": {"mu_values": [9, 10], "sigma_values": [2], "lambda_values": [100],
             "replications": 5, "bic_sampling": "per_bank"}
  })");
  const auto c = parse_run_config(j);
  CHECK(c.mode == Mode::Grid);
  CHECK(c.seed == 9u);
  CHECK(c.grid.seed == 9u);
  CHECK(c.output_dir == "o");
  CHECK(c.settings.threads == 2);
  CHECK(c.settings.discretization.n_points == 524288);
  CHECK(c.settings.discretization.span_mult == 6);
  CHECK(c.settings.regression.intercept == -2.0);
  CHECK(c.settings.regression.slope == 4.9);
  CHECK(c.grid.combinations() == 2);
  CHECK(c.grid.bic_sampling == BicSampling::PerBank);
  CHECK_NOTHROW(c.require(Mode::Grid));
  CHECK_THROWS_AS(c.require(Mode::Sma), InvalidInput);

  RunConfig no_seed = parse_run_config(nlohmann::json{{"mode", "grid"}});
  CHECK_THROWS_AS(no_seed.require(Mode::Grid), InvalidInput);
  CHECK_THROWS_AS(parse_run_config(nlohmann::json{{"mode", "nope"}}), InvalidInput);
  CHECK_THROWS_AS(parse_run_config(nlohmann::json{{"seed", "x"}}), InvalidInput);
  RunConfig sma = parse_run_config(nlohmann::json{{"mode", "sma"}});
  CHECK_THROWS_AS(sma.require(Mode::Sma), InvalidInput);
  RunConfig bad_points = parse_run_config(nlohmann::json{{"discretization", {{"n_points", 1000}}}});
  CHECK_THROWS_AS(bad_points.require(Mode::Lda), InvalidInput);
}

TEST_CASE("number formats") {
  CHECK(format_bn(1.185e9) == "1.185");
  CHECK(format_bn(55e6) == "0.055");
  CHECK(std::stod(format_raw(0.1 + 0.2)) == 0.1 + 0.2);
}

TEST_CASE("sma command") {
  TempDir dir("sma");
  // Small losses summing to 0.876bn / 0.7 over ten years.
  std::string csv = "year,amount_eur\n";
  for (int y = 2011; y <= 2020; ++y) {
    for (int i = 0; i < 25; ++i) csv += std::to_string(y) + ",5005714.285714286\n";
  }
  csv += "2003,900000000\n2019,9000\n";
  write_file(dir.path / "losses.csv", csv);

  RunConfig c;
  c.output_dir = dir.path / "out";
  c.losses_path = dir.path / "losses.csv";
  c.profile = BankProfile::from_bi(8 * kBillion);
  std::ostringstream log;
  const auto run = cmd_sma(c, log);
  CHECK(run.breakdown.lc / kBillion == Approx(0.876).epsilon(1e-9));
  CHECK(format_bn(run.breakdown.sma) == "1.185");
  CHECK(run.outside_window == 1);
  CHECK(run.below_floor == 1);
  CHECK(log.str().find("SMA") != std::string::npos);
  CHECK(first_line(c.output_dir / "sma.csv") ==
        "bi_bn,bic_bn,lc_bn,alpha_star,el_bn,sma_bn,bi_eur,bic_eur,lc_eur,el_eur,sma_eur,"
        "short_window");
  CHECK(fs::exists(c.output_dir / "metadata.json"));

  write_file(dir.path / "empty.csv", "year,amount_eur\n");
  c.losses_path = dir.path / "empty.csv";
  c.profile = BankProfile::from_bi(0.5 * kBillion);
  CHECK(cmd_sma(c, log).breakdown.sma == Approx(55 * kMillion));

  write_file(dir.path / "bad.csv", "year,amount_eur\n2015,100\n2016,-1\n");
  c.losses_path = dir.path / "bad.csv";
  CHECK_THROWS_WITH_AS(cmd_sma(c, log), doctest::Contains("line 3"), IngestionError);
}

TEST_CASE("lda command") {
  TempDir dir("lda");
  RunConfig c;
  c.output_dir = dir.path;
  c.lda = {9, 2.1, 323, 10'000, 0.999, std::nullopt, dir.path / "cdf.csv"};
  std::ostringstream log;
  const auto run = cmd_lda(c, log);
  CHECK(run.var / kBillion == Approx(0.203).epsilon(0.02));
  CHECK_FALSE(run.nines);
  CHECK(first_line(dir.path / "cdf.csv") == "x_eur,cdf");

  c.lda.capital = run.var;
  const auto again = cmd_lda(c, log);
  REQUIRE(again.nines);
  CHECK(*again.nines == Approx(3.0).epsilon(0.01));

  c.lda = {8, 1, 20'000, 0, 0.5, std::nullopt, std::nullopt};
  const auto big = cmd_lda(c, log);
  CHECK(big.var == Approx(20'000 * std::exp(8.5)).epsilon(0.01));

  c.lda.sigma = -1;
  CHECK_THROWS_AS(cmd_lda(c, log), InvalidInput);
}

TEST_CASE("curves are byte-identical across runs and headers are pinned") {
  TempDir dir("curves");
  RunConfig c;
  std::ostringstream log;
  c.output_dir = dir.path / "a";
  cmd_curves(c, log);
  c.output_dir = dir.path / "b";
  cmd_curves(c, log);
  for (const char* f : {"fig2.csv", "fig3.csv", "metadata.json"}) {
    CHECK(slurp(dir.path / "a" / f) == slurp(dir.path / "b" / f));
  }
  CHECK(first_line(dir.path / "a" / "fig2.csv") == "alpha_star,lc_over_bic,sma_over_el");
  CHECK(first_line(dir.path / "a" / "fig3.csv") == "el_over_bic,sma_ratio_19_over_7");
  const auto meta = nlohmann::json::parse(slurp(dir.path / "a" / "metadata.json"));
  CHECK(meta.at("schema_version") == kCsvSchemaVersion);
  CHECK(meta.at("fft").at("n_points") == 1048576);
}

TEST_CASE("grid outputs embed the seed and are reproducible") {
  TempDir dir("grid");
  RunConfig c;
  c.seed = 123;
  c.grid.mu_values = {9, 10};
  c.grid.sigma_values = {2};
  c.grid.lambda_values = {1000};
  c.grid.replications = 4;
  std::ostringstream log;
  c.output_dir = dir.path / "a";
  const auto r = cmd_grid(c, log);
  c.output_dir = dir.path / "b";
  cmd_grid(c, log);
  for (const char* f : {"grid_combinations.csv", "grid_replications.csv", "fig6.csv", "metadata.json"}) {
    CHECK(slurp(dir.path / "a" / f) == slurp(dir.path / "b" / f));
  }
  CHECK(first_line(dir.path / "a" / "grid_combinations.csv") ==
        "index,mu,sigma,lambda,cond_a,cond_b,cond_c,passed,ama999_bn,expected_lc_bn,median_bi_bn,"
        "freq_20k_per_bi_bn,replications,failed_fits,mean_sma_bn,cov_sma,mean_sla_bn,cov_sla,"
        "ama999_eur,expected_lc_eur,median_bi_eur,screening_error");
  CHECK(first_line(dir.path / "a" / "grid_replications.csv") ==
        "index,replication,seed_path,n_losses,sim_lc_eur,sampled_bic_eur,bi_eur,sma_eur,sla_eur,"
        "mu_hat,sigma_hat,lambda_hat,converged,log_likelihood,fit_status");
  CHECK(first_line(dir.path / "a" / "fig6.csv") ==
        "index,mu,sigma,lambda,expected_lc_bn,cov_sma,cov_sla");
  const auto meta = nlohmann::json::parse(slurp(dir.path / "a" / "metadata.json"));
  CHECK(meta.at("seed") == 123);
  CHECK(meta.at("grid").at("replications") == 4);
  CHECK(meta.at("result").at("passed") == r.passed_count());
  CHECK(slurp(dir.path / "a" / "grid_replications.csv").find(",123/") != std::string::npos);
}

TEST_CASE("table headers") {
  TempDir dir("headers");
  const std::vector<Table2Row> rows(1);
  write_table2_csv(dir.path / "t.csv", rows);
  CHECK(first_line(dir.path / "t.csv") ==
        "bi_bn,bic_bn,mu,sigma,quantile,lc_bn,lambda,alpha_star,el_bn,sma_bn,var999_bn,"
        "sma_over_var,nines,cond_c_pass,bi_eur,bic_eur,lc_eur,lambda_raw,alpha_star_raw,el_eur,"
        "sma_eur,var999_eur,nines_raw,span_eur");
  write_fig7_csv(dir.path / "f7.csv", rows);
  CHECK(first_line(dir.path / "f7.csv") == "bi_bn,mu,sigma,alpha_star,quantile,nines");
  VarElFit fit;
  write_fig8_csv(dir.path / "f8.csv", {}, fit);
  CHECK(first_line(dir.path / "f8.csv") ==
        "alpha_star_group,el_bn,var999_bn,ln_el,ln_var,fitted_ln_var");
  write_fig8_lines_csv(dir.path / "f8l.csv", fit);
  CHECK(first_line(dir.path / "f8l.csv") == "alpha_star_group,intercept,slope,n");
}
