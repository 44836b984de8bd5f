#include "oprisk/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/os.h>

#include "oprisk/errors.hpp"

namespace oprisk {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

double number_at(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number()) throw InvalidInput(std::string("config key '") + key + "' must be a number");
  return v.get<double>();
}

std::vector<double> numbers_at(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_array()) throw InvalidInput(std::string("config key '") + key + "' must be a list");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw InvalidInput(std::string("config key '") + key + "' must hold numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

const char* bool_cell(bool b) { return b ? "1" : "0"; }

}  // namespace

IngestionError::IngestionError(std::size_t line, const std::string& what)
    : InvalidInput("line " + std::to_string(line) + ": " + what), line_(line) {}

std::vector<LossEvent> read_loss_csv(std::istream& in) {
  std::vector<LossEvent> events;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (line_no == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
    view = trim(view);
    if (view.empty()) continue;
    if (!header_seen) {
      if (view != "year,amount_eur") {
        throw IngestionError(line_no, "expected header 'year,amount_eur'");
      }
      header_seen = true;
      continue;
    }
    const auto comma = view.find(',');
    if (comma == std::string_view::npos || view.find(',', comma + 1) != std::string_view::npos) {
      throw IngestionError(line_no, "expected two fields");
    }
    const std::string_view year_text = trim(view.substr(0, comma));
    const std::string_view amount_text = trim(view.substr(comma + 1));

    LossEvent e;
    auto [yp, yec] = std::from_chars(year_text.data(), year_text.data() + year_text.size(), e.year);
    if (yec != std::errc() || yp != year_text.data() + year_text.size()) {
      throw IngestionError(line_no, "invalid year '" + std::string(year_text) + "'");
    }
    auto [ap, aec] = std::from_chars(amount_text.data(), amount_text.data() + amount_text.size(),
                                     e.amount, std::chars_format::fixed);
    if (aec != std::errc() || ap != amount_text.data() + amount_text.size() ||
        !std::isfinite(e.amount)) {
      throw IngestionError(line_no, "invalid amount '" + std::string(amount_text) + "'");
    }
    if (!(e.amount > 0.0)) {
      throw IngestionError(line_no, "loss amount must be positive, got " + std::string(amount_text));
    }
    events.push_back(e);
  }
  if (!header_seen) throw IngestionError(1, "missing header 'year,amount_eur'");
  return events;
}

std::vector<LossEvent> read_loss_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  return read_loss_csv(in);
}

BankProfile parse_bank_profile(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidInput("bank profile must be an object");
  const bool direct = j.contains("bi_direct");
  const bool any_component = j.contains("ildc_avg") || j.contains("sc_avg") || j.contains("fc_avg");
  if (direct == any_component) {
    throw InvalidInput("bank profile needs either bi_direct or ildc_avg/sc_avg/fc_avg, not both");
  }
  try {
    if (direct) return BankProfile::from_bi(number_at(j, "bi_direct"));
    return BankProfile::from_components(number_at(j, "ildc_avg"), number_at(j, "sc_avg"),
                                        number_at(j, "fc_avg"));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("bank profile: ") + e.what());
  }
}

BankProfile load_bank_profile(const std::filesystem::path& path) {
  return parse_bank_profile(read_json(path));
}

Mode parse_mode(const std::string& name) {
  if (name == "sma") return Mode::Sma;
  if (name == "lda") return Mode::Lda;
  if (name == "grid") return Mode::Grid;
  if (name == "table2") return Mode::Table2;
  if (name == "curves") return Mode::Curves;
  throw InvalidInput("unknown mode '" + name + "'");
}

const char* to_string(Mode mode) {
  switch (mode) {
    case Mode::Sma: return "sma";
    case Mode::Lda: return "lda";
    case Mode::Grid: return "grid";
    case Mode::Table2: return "table2";
    case Mode::Curves: return "curves";
  }
  return "?";
}

Discretization parse_discretization(const std::string& name) {
  if (name == "mean_preserving") return Discretization::MeanPreserving;
  if (name == "rounding") return Discretization::Rounding;
  throw InvalidInput("unknown discretization method '" + name + "'");
}

const char* to_string(Discretization method) {
  switch (method) {
    case Discretization::MeanPreserving: return "mean_preserving";
    case Discretization::Rounding: return "rounding";
  }
  return "?";
}

void RunConfig::require(Mode m) const {
  if (mode && *mode != m) {
    throw InvalidInput(std::string("config is for mode '") + to_string(*mode) + "', not '" +
                       to_string(m) + "'");
  }
  switch (m) {
    case Mode::Sma:
      if (!losses_path) throw InvalidInput("sma needs a loss CSV");
      if (!profile && !profile_path) throw InvalidInput("sma needs a bank profile");
      if (window_years < 1) throw InvalidInput("window_years must be at least 1");
      break;
    case Mode::Lda:
      CompoundModel{{lda.mu, lda.sigma, lda.truncation}, lda.lambda}.validate();
      if (!(lda.p > 0.0 && lda.p < 1.0)) throw InvalidInput("p must lie in (0, 1)");
      break;
    case Mode::Grid:
      if (!seed) throw InvalidInput("grid is stochastic and needs a seed");
      grid.validate();
      break;
    case Mode::Table2:
    case Mode::Curves:
      break;
  }
  settings.discretization.validate();
  settings.regression.validate();
}

std::filesystem::path default_output_dir() {
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') return env;
  return "out";
}

RunConfig parse_run_config(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidInput("run config must be a JSON object");
  RunConfig c;
  c.output_dir = default_output_dir();
  try {
    if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("threads")) c.settings.threads = j.at("threads").get<unsigned>();

    if (j.contains("discretization")) {
      const auto& d = j.at("discretization");
      auto& cfg = c.settings.discretization;
      if (d.contains("n_points")) cfg.n_points = d.at("n_points").get<std::size_t>();
      if (d.contains("span")) cfg.span = number_at(d, "span");
      if (d.contains("span_mult")) cfg.span_mult = number_at(d, "span_mult");
      if (d.contains("tilt")) cfg.tilt = number_at(d, "tilt");
      if (d.contains("max_retries")) cfg.max_retries = d.at("max_retries").get<int>();
      if (d.contains("method")) cfg.method = parse_discretization(d.at("method").get<std::string>());
    }
    if (j.contains("regression")) {
      const auto& r = j.at("regression");
      auto& p = c.settings.regression;
      if (r.contains("intercept")) p.intercept = number_at(r, "intercept");
      if (r.contains("slope")) p.slope = number_at(r, "slope");
      if (r.contains("resid_sd")) p.resid_sd = number_at(r, "resid_sd");
    }
    if (j.contains("bic_schedule")) {
      std::vector<BicSchedule::Bucket> buckets;
      for (const auto& b : j.at("bic_schedule")) {
        buckets.push_back({number_at(b, "lower"), number_at(b, "rate")});
      }
      c.settings.schedule = BicSchedule(std::move(buckets));
    }

    if (j.contains("losses")) c.losses_path = j.at("losses").get<std::string>();
    if (j.contains("profile")) {
      const auto& p = j.at("profile");
      if (p.is_string()) {
        c.profile_path = p.get<std::string>();
      } else {
        c.profile = parse_bank_profile(p);
      }
    }
    if (j.contains("window_years")) c.window_years = j.at("window_years").get<int>();
    if (j.contains("last_year")) c.last_year = j.at("last_year").get<int>();

    if (j.contains("lda")) {
      const auto& l = j.at("lda");
      if (l.contains("mu")) c.lda.mu = number_at(l, "mu");
      if (l.contains("sigma")) c.lda.sigma = number_at(l, "sigma");
      if (l.contains("lambda")) c.lda.lambda = number_at(l, "lambda");
      if (l.contains("truncation")) c.lda.truncation = number_at(l, "truncation");
      if (l.contains("p")) c.lda.p = number_at(l, "p");
      if (l.contains("capital")) c.lda.capital = number_at(l, "capital");
    }

    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      if (g.contains("smoke")) c.smoke = g.at("smoke").get<bool>();
      if (c.smoke) c.grid = GridSpec::smoke(0);
      if (g.contains("mu_values")) c.grid.mu_values = numbers_at(g, "mu_values");
      if (g.contains("sigma_values")) c.grid.sigma_values = numbers_at(g, "sigma_values");
      if (g.contains("lambda_values")) c.grid.lambda_values = numbers_at(g, "lambda_values");
      if (g.contains("replications")) c.grid.replications = g.at("replications").get<int>();
      if (g.contains("bic_sampling")) {
        const auto s = g.at("bic_sampling").get<std::string>();
        if (s == "per_replication") {
          c.grid.bic_sampling = BicSampling::PerReplication;
        } else if (s == "per_bank") {
          c.grid.bic_sampling = BicSampling::PerBank;
        } else {
          throw InvalidInput("bic_sampling must be 'per_replication' or 'per_bank'");
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("run config: ") + e.what());
  }
  if (c.seed) c.grid.seed = *c.seed;
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  RunConfig c = parse_run_config(read_json(path));
  // Relative input paths are resolved against the config file.
  const auto base = path.parent_path();
  if (c.losses_path && c.losses_path->is_relative()) c.losses_path = base / *c.losses_path;
  if (c.profile_path && c.profile_path->is_relative()) c.profile_path = base / *c.profile_path;
  return c;
}

std::string format_bn(Eur value) { return fmt::format("{:.3f}", value / kBillion); }

std::string format_raw(double value) { return fmt::format("{:.17g}", value); }

void write_sma_csv(const std::filesystem::path& path, const SmaBreakdown& b) {
  auto out = open_output(path);
  out << "bi_bn,bic_bn,lc_bn,alpha_star,el_bn,sma_bn,bi_eur,bic_eur,lc_eur,el_eur,sma_eur,"
         "short_window\n";
  out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", format_bn(b.bi), format_bn(b.bic),
                     format_bn(b.lc),
                     b.alpha_star ? fmt::format("{:.4f}", *b.alpha_star) : std::string("nan"),
                     format_bn(b.el), format_bn(b.sma), format_raw(b.bi), format_raw(b.bic),
                     format_raw(b.lc), format_raw(b.el), format_raw(b.sma),
                     bool_cell(b.short_window));
}

void write_table2_csv(const std::filesystem::path& path, const std::vector<Table2Row>& rows) {
  auto out = open_output(path);
  out << "bi_bn,bic_bn,mu,sigma,quantile,lc_bn,lambda,alpha_star,el_bn,sma_bn,var999_bn,"
         "sma_over_var,nines,cond_c_pass,bi_eur,bic_eur,lc_eur,lambda_raw,alpha_star_raw,el_eur,"
         "sma_eur,var999_eur,nines_raw,span_eur\n";
  for (const auto& r : rows) {
    out << fmt::format(
        "{},{},{},{},{},{},{:.0f},{:.1f},{},{},{},{:.1f},{:.1f},{},{},{},{},{},{},{},{},{},{},{}\n",
        format_bn(r.bi), format_bn(r.bic), r.mu, r.sigma, to_string(r.quantile), format_bn(r.lc),
        r.lambda, r.alpha_star, format_bn(r.el), format_bn(r.sma), format_bn(r.var999),
        r.sma_over_var, r.nines, bool_cell(r.cond_c_pass), format_raw(r.bi), format_raw(r.bic),
        format_raw(r.lc), format_raw(r.lambda), format_raw(r.alpha_star), format_raw(r.el),
        format_raw(r.sma), format_raw(r.var999), format_raw(r.nines), format_raw(r.span));
  }
}

void write_fig7_csv(const std::filesystem::path& path, const std::vector<Table2Row>& rows) {
  auto out = open_output(path);
  out << "bi_bn,mu,sigma,alpha_star,quantile,nines\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{:.1f},{},{}\n", format_bn(r.bi), r.mu, r.sigma, r.alpha_star,
                       to_string(r.quantile), format_raw(r.nines));
  }
}

void write_fig8_csv(const std::filesystem::path& path, const std::vector<Table2Row>& rows,
                    const VarElFit& fit) {
  auto out = open_output(path);
  out << "alpha_star_group,el_bn,var999_bn,ln_el,ln_var,fitted_ln_var\n";
  for (const auto& r : rows) {
    const double group = static_cast<double>(std::lround(r.alpha_star * 10.0)) / 10.0;
    double intercept = std::nan("");
    for (const auto& g : fit.groups) {
      if (g.alpha_star == group) intercept = g.intercept;
    }
    const double ln_el = std::log(r.el);
    out << fmt::format("{:.1f},{},{},{},{},{}\n", group, format_bn(r.el), format_bn(r.var999),
                       format_raw(ln_el), format_raw(std::log(r.var999)),
                       format_raw(intercept + fit.slope * ln_el));
  }
}

void write_fig8_lines_csv(const std::filesystem::path& path, const VarElFit& fit) {
  auto out = open_output(path);
  out << "alpha_star_group,intercept,slope,n\n";
  for (const auto& g : fit.groups) {
    out << fmt::format("{:.1f},{},{},{}\n", g.alpha_star, format_raw(g.intercept),
                       format_raw(fit.slope), g.n);
  }
}

void write_grid_combinations_csv(const std::filesystem::path& path, const GridStudyResult& r) {
  auto out = open_output(path);
  out << "index,mu,sigma,lambda,cond_a,cond_b,cond_c,passed,ama999_bn,expected_lc_bn,"
         "median_bi_bn,freq_20k_per_bi_bn,replications,failed_fits,mean_sma_bn,cov_sma,"
         "mean_sla_bn,cov_sla,ama999_eur,expected_lc_eur,median_bi_eur,screening_error\n";
  for (const auto& c : r.combinations) {
    const auto& k = c.conditions;
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},\"{}\"\n",
                       c.index, c.mu, c.sigma, c.lambda, bool_cell(k.cond_a), bool_cell(k.cond_b),
                       bool_cell(k.cond_c), bool_cell(c.passed()), format_bn(k.ama_999),
                       format_bn(k.expected_lc), format_bn(k.median_bi),
                       format_raw(k.freq_20k_per_bi_bn), c.replications.size(), c.failed_fits,
                       format_bn(c.mean_sma), format_raw(c.cov_sma), format_bn(c.mean_sla),
                       format_raw(c.cov_sla), format_raw(k.ama_999), format_raw(k.expected_lc),
                       format_raw(k.median_bi), c.screening_error);
  }
}

void write_grid_replications_csv(const std::filesystem::path& path, const GridStudyResult& r) {
  auto out = open_output(path);
  out << "index,replication,seed_path,n_losses,sim_lc_eur,sampled_bic_eur,bi_eur,sma_eur,sla_eur,"
         "mu_hat,sigma_hat,lambda_hat,converged,log_likelihood,fit_status\n";
  for (const auto& c : r.combinations) {
    for (std::size_t i = 0; i < c.replications.size(); ++i) {
      const auto& rec = c.replications[i];
      out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", c.index, i,
                         rec.seed_path, rec.n_losses, format_raw(rec.sim_lc),
                         format_raw(rec.sampled_bic), format_raw(rec.bi), format_raw(rec.sma),
                         format_raw(rec.sla), format_raw(rec.fit.mu_hat),
                         format_raw(rec.fit.sigma_hat), format_raw(rec.fit.lambda_hat),
                         bool_cell(rec.fit.converged), format_raw(rec.fit.log_likelihood),
                         rec.fit_status);
    }
  }
}

void write_fig6_csv(const std::filesystem::path& path, const GridStudyResult& r) {
  auto out = open_output(path);
  out << "index,mu,sigma,lambda,expected_lc_bn,cov_sma,cov_sla\n";
  for (const auto& c : r.combinations) {
    if (!c.passed()) continue;
    out << fmt::format("{},{},{},{},{},{},{}\n", c.index, c.mu, c.sigma, c.lambda,
                       format_raw(c.conditions.expected_lc / kBillion), format_raw(c.cov_sma),
                       format_raw(c.cov_sla));
  }
}

void write_fig2_csv(const std::filesystem::path& path) {
  std::vector<double> ratios;
  for (int k = 2; k <= 60; ++k) ratios.push_back(k / 20.0);
  auto out = open_output(path);
  out << "alpha_star,lc_over_bic,sma_over_el\n";
  for (double a : {7.0, 11.0, 15.0, 19.0}) {
    for (const auto& p : sma_el_curve(a, ratios)) {
      out << fmt::format("{},{},{}\n", a, p.x, format_raw(p.y));
    }
  }
}

void write_fig3_csv(const std::filesystem::path& path) {
  std::vector<double> u;
  for (int k = 1; k <= 200; ++k) u.push_back(k / 200.0);
  auto out = open_output(path);
  out << "el_over_bic,sma_ratio_19_over_7\n";
  for (const auto& p : alpha_ratio_curve(u)) {
    out << fmt::format("{},{}\n", p.x, format_raw(p.y));
  }
}

void write_cdf_csv(const std::filesystem::path& path, const AggregateDistribution& agg,
                   std::size_t max_rows) {
  const auto cum = agg.cumulative();
  const std::size_t stride = std::max<std::size_t>(1, cum.size() / std::max<std::size_t>(1, max_rows));
  auto out = open_output(path);
  out << "x_eur,cdf\n";
  for (std::size_t k = 0; k < cum.size(); k += stride) {
    out << fmt::format("{},{}\n", format_raw(static_cast<double>(k) * agg.grid_step()),
                       format_raw(cum[k]));
  }
}

void write_metadata(const std::filesystem::path& path, const nlohmann::ordered_json& meta) {
  auto out = open_output(path);
  out << meta.dump(2) << "\n";
}

nlohmann::ordered_json settings_metadata(const StudySettings& s) {
  nlohmann::ordered_json j;
  j["schema_version"] = kCsvSchemaVersion;
  j["tool_version"] = kToolVersion;
  const auto& d = s.discretization;
  j["fft"] = {{"n_points", d.n_points},      {"span", d.span},
              {"span_mult", d.span_mult},    {"span_quantile", d.span_quantile},
              {"tilt_times_span", d.tilt},   {"max_retries", d.max_retries},
              {"retry_span_factor", 4},      {"max_overflow", d.max_overflow},
              {"discretization", to_string(d.method)}};
  j["regression"] = {{"intercept", s.regression.intercept},
                     {"slope", s.regression.slope},
                     {"resid_sd", s.regression.resid_sd},
                     {"units", "EUR millions, natural logs"}};
  nlohmann::ordered_json buckets = nlohmann::ordered_json::array();
  for (const auto& b : s.schedule.buckets()) buckets.push_back({{"lower", b.lower}, {"rate", b.rate}});
  j["bic_schedule"] = buckets;
  j["fit"] = {{"optimizer", "BFGS on (mu, ln sigma)"},
              {"gradient_tolerance", kFitGradientTolerance},
              {"starts", 4},
              {"min_observations", kMinFitObservations}};
  j["collection_floor_eur"] = kCollectionFloor;
  return j;
}

}  // namespace oprisk
