#pragma once

// Run configuration, loss-data ingestion and CSV emission.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "oprisk/experiments.hpp"
#include "oprisk/sma.hpp"

namespace oprisk {

/// Bumped whenever a CSV header or column meaning changes.
inline constexpr int kCsvSchemaVersion = 1;
inline constexpr const char* kToolVersion = "1.0.0";
/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "OPRISK_OUTPUT_DIR";

/// A malformed input line; line numbers are 1-based and count the header.
class IngestionError : public InvalidInput {
 public:
  IngestionError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Reads `year,amount_eur` rows. Amounts must be positive plain decimals.
std::vector<LossEvent> read_loss_csv(std::istream& in);
std::vector<LossEvent> read_loss_csv(const std::filesystem::path& path);

/// Keys: ildc_avg, sc_avg, fc_avg (all three) or bi_direct, in EUR.
BankProfile parse_bank_profile(const nlohmann::json& j);
BankProfile load_bank_profile(const std::filesystem::path& path);

enum class Mode { Sma, Lda, Grid, Table2, Curves };
Mode parse_mode(const std::string& name);
const char* to_string(Mode mode);

Discretization parse_discretization(const std::string& name);
const char* to_string(Discretization method);

struct LdaParams {
  double mu = 9.0;
  double sigma = 2.0;
  double lambda = 100.0;
  Eur truncation = kCollectionFloor;
  double p = kCapitalConfidence;
  std::optional<Eur> capital;
  std::optional<std::filesystem::path> dump_cdf;
};

/// Everything a run needs. Loaded from a JSON file; command-line flags
/// override individual fields afterwards.
struct RunConfig {
  std::optional<Mode> mode;
  std::optional<std::uint64_t> seed;
  std::filesystem::path output_dir;
  StudySettings settings;

  // sma
  std::optional<std::filesystem::path> losses_path;
  std::optional<std::filesystem::path> profile_path;
  std::optional<BankProfile> profile;
  int window_years = kLcWindowYears;
  std::optional<int> last_year;

  // lda
  LdaParams lda;

  // grid
  GridSpec grid = GridSpec::standard(0);
  bool smoke = false;

  /// Throws InvalidInput when a field required by `mode` is missing.
  void require(Mode mode) const;
};

/// Default output directory: $OPRISK_OUTPUT_DIR, else "out".
std::filesystem::path default_output_dir();

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

/// Monetary cell in billions with three decimals.
std::string format_bn(Eur value);
/// Full-precision, round-trippable number.
std::string format_raw(double value);

void write_sma_csv(const std::filesystem::path& path, const SmaBreakdown& b);
void write_table2_csv(const std::filesystem::path& path, const std::vector<Table2Row>& rows);
void write_fig7_csv(const std::filesystem::path& path, const std::vector<Table2Row>& rows);
void write_fig8_csv(const std::filesystem::path& path, const std::vector<Table2Row>& rows,
                    const VarElFit& fit);
void write_fig8_lines_csv(const std::filesystem::path& path, const VarElFit& fit);
void write_grid_combinations_csv(const std::filesystem::path& path, const GridStudyResult& r);
void write_grid_replications_csv(const std::filesystem::path& path, const GridStudyResult& r);
void write_fig6_csv(const std::filesystem::path& path, const GridStudyResult& r);
void write_fig2_csv(const std::filesystem::path& path);
void write_fig3_csv(const std::filesystem::path& path);
/// At most `max_rows` evenly spaced (x, cdf) pairs.
void write_cdf_csv(const std::filesystem::path& path, const AggregateDistribution& agg,
                   std::size_t max_rows = 4096);
void write_metadata(const std::filesystem::path& path, const nlohmann::ordered_json& meta);

/// Settings block shared by all run-metadata files.
nlohmann::ordered_json settings_metadata(const StudySettings& settings);

}  // namespace oprisk
