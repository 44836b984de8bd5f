#pragma once

// Simulation studies comparing SMA capital with model-based capital:
//  - a grid study over (mu, sigma, lambda) measuring how variable SMA and
//    fitted-model (SLA) capital are across simulated banks;
//  - a Table-2 style study locating SMA on the true aggregate distribution.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "oprisk/aggregate.hpp"
#include "oprisk/calibration.hpp"
#include "oprisk/regression.hpp"
#include "oprisk/rng.hpp"
#include "oprisk/severity.hpp"
#include "oprisk/sma.hpp"

namespace oprisk {

// Screening bounds; all comparisons are strict.
inline constexpr Eur kAmaLowerBound = 10.0 * kMillion;
inline constexpr Eur kAmaUpperBound = 50.0 * kBillion;
inline constexpr Eur kExpectedLcLowerBound = 64.0 * kMillion;
inline constexpr Eur kExpectedLcUpperBound = 150.0 * kBillion;
inline constexpr Eur kFrequencyThreshold = 20'000.0;
inline constexpr double kMinFrequencyPerBiBn = 20.0;
inline constexpr double kCapitalConfidence = 0.999;
inline constexpr int kSimulationYears = 10;

/// How the BI Component is drawn in the grid study.
enum class BicSampling { PerReplication, PerBank };

struct StudySettings {
  RegressionParams regression;
  DiscretizationConfig discretization;
  BicSchedule schedule = BicSchedule::standard();
  /// Worker threads; 0 uses the hardware concurrency.
  unsigned threads = 0;
};

struct ConditionReport {
  bool cond_a = false;
  bool cond_b = false;
  bool cond_c = false;
  /// 99.9% quantile of the annual loss under the model; NaN if unresolved.
  Eur ama_999 = 0.0;
  /// Expected LC from losses above the collection floor.
  Eur expected_lc = 0.0;
  /// BI on the regression line (eps = 0) at expected_lc; NaN outside its domain.
  Eur median_bi = 0.0;
  double freq_20k_per_bi_bn = 0.0;

  bool passed() const { return cond_a && cond_b && cond_c; }
};

/// Screens a parameter set: (A) 10m < AMA < 50bn, (B) 64m < E[LC] < 150bn,
/// (C) annual count of losses above 20k per bn of median BI > 20.
/// `ama_999` skips the FFT when already known. ResolutionError propagates.
ConditionReport check_conditions(const CompoundModel& model, const StudySettings& settings,
                                 std::optional<Eur> ama_999 = std::nullopt);

struct ReplicationOptions {
  int years = kSimulationYears;
  Eur floor = kCollectionFloor;
  double confidence = kCapitalConfidence;
  /// Use this BIC instead of sampling one from the regression.
  std::optional<Eur> fixed_bic;
};

struct ReplicationRecord {
  Eur sim_lc = 0.0;
  Eur sampled_bic = 0.0;
  Eur bi = 0.0;
  Eur sma = 0.0;
  /// NaN when the fit failed or the SLA is undefined.
  Eur sla = 0.0;
  FitResult fit;
  std::size_t n_losses = 0;
  /// "ok", "insufficient_data", "degenerate", "non_convergence" or "sla_undefined".
  std::string fit_status;
  std::string seed_path;

  bool sla_valid() const { return fit_status == "ok"; }
};

/// One simulated bank: ten years of losses, its LC, a BIC from the
/// regression, SMA, and SLA capital from a truncated fit above the floor.
ReplicationRecord run_replication(const CompoundModel& model, const StudySettings& settings,
                                  RngStream& stream, const ReplicationOptions& options = {});

struct GridSpec {
  std::vector<double> mu_values;
  std::vector<double> sigma_values;
  std::vector<double> lambda_values;
  int replications = 100;
  std::uint64_t seed = 0;
  BicSampling bic_sampling = BicSampling::PerReplication;

  /// mu 8..12 and sigma 1..4 in steps of 0.5, lambda {100, 500, 1000, 5000, 10000}.
  static GridSpec standard(std::uint64_t seed);
  /// The standard mu/sigma grid with lambda {100, 1000} and 20 replications.
  static GridSpec smoke(std::uint64_t seed);

  std::size_t combinations() const {
    return mu_values.size() * sigma_values.size() * lambda_values.size();
  }
  void validate() const;
};

struct CombinationResult {
  std::size_t index = 0;
  double mu = 0.0;
  double sigma = 0.0;
  double lambda = 0.0;
  ConditionReport conditions;
  /// Set when the AMA could not be resolved; the combination is then rejected.
  std::string screening_error;
  std::vector<ReplicationRecord> replications;
  std::size_t failed_fits = 0;
  double mean_sma = 0.0;
  double cov_sma = 0.0;
  double mean_sla = 0.0;
  double cov_sla = 0.0;

  bool passed() const { return screening_error.empty() && conditions.passed(); }
};

struct GridStudyResult {
  GridSpec spec;
  std::vector<CombinationResult> combinations;

  std::size_t passed_count() const;
  /// Share of passing combinations with CoV(SMA) > CoV(SLA).
  double share_sma_more_variable() const;
};

/// Combinations are indexed mu-major, then sigma, then lambda. Replication r
/// of combination c draws from stream (seed, c, r).
GridStudyResult grid_study(const GridSpec& spec, const StudySettings& settings);

/// Sample standard deviation over mean; NaN for fewer than two values.
double coefficient_of_variation(const std::vector<double>& values);

struct Table2Block {
  Eur bi = 0.0;
  std::vector<std::pair<double, double>> mu_sigma;
};

/// The three bank sizes and six (mu, sigma) pairs per size of the reference study.
std::vector<Table2Block> table2_standard_inputs();

struct Table2Row {
  Eur bi = 0.0;
  Eur bic = 0.0;
  double mu = 0.0;
  double sigma = 0.0;
  LcQuantile quantile = LcQuantile::Median;
  Eur lc = 0.0;
  double lambda = 0.0;
  double alpha_star = 0.0;
  Eur el = 0.0;
  Eur sma = 0.0;
  Eur var999 = 0.0;
  double sma_over_var = 0.0;
  double nines = 0.0;
  bool cond_c_pass = false;
  /// Grid span actually used by the FFT.
  Eur span = 0.0;
};

/// For each block, (mu, sigma) pair and LC quantile: LC from the regression
/// at the block's BIC, lambda from EL = LC / alpha*, then SMA, FFT VaR and
/// the number of nines of SMA. All quantities are conditional on losses
/// above the collection floor.
std::vector<Table2Row> table2_study(const std::vector<Table2Block>& blocks,
                                    const StudySettings& settings);

struct VarElFit {
  struct Group {
    double alpha_star;
    double intercept;
    std::size_t n;
  };
  double slope = 0.0;
  /// Sorted by alpha*.
  std::vector<Group> groups;

  /// Intercept of the highest-alpha* group minus that of the lowest.
  double gap() const;
};

/// Least squares of ln VaR on ln EL with a common slope and one intercept per
/// alpha* (rows grouped by alpha* rounded to one decimal). Throws
/// InvalidInput if a group has fewer than two rows or the design is singular.
VarElFit var_el_regression(const std::vector<Table2Row>& rows);

}  // namespace oprisk
