#pragma once

// Standardized Measurement Approach calculus: Business Indicator, the BI
// Component schedule, the Loss Component, the risk factor alpha* and the
// SMA capital formula, plus the closed-form ratio curves used to study how
// SMA responds to expected loss.

#include <optional>
#include <span>
#include <vector>

namespace oprisk {

/// Amounts are plain doubles in EUR throughout.
using Eur = double;

inline constexpr Eur kMillion = 1.0e6;
inline constexpr Eur kBillion = 1.0e9;

/// Losses below this amount are never collected (and never enter LC or fits).
inline constexpr Eur kCollectionFloor = 10'000.0;
inline constexpr Eur kLcThresholdLow = 10.0 * kMillion;
inline constexpr Eur kLcThresholdHigh = 100.0 * kMillion;
/// BIC at the edge of the first bucket; offset of the SMA formula.
inline constexpr Eur kSmaOffset = 110.0 * kMillion;
/// Banks below this BI get SMA = BIC.
inline constexpr Eur kLossComponentBi = 1.0 * kBillion;
/// LC is a 10-year sum annualized by a fixed divisor.
inline constexpr int kLcWindowYears = 10;

struct BiComponents {
  Eur ildc_avg = 0.0;
  Eur sc_avg = 0.0;
  Eur fc_avg = 0.0;
};

/// Either the three 3-year-averaged BI components or a directly supplied BI.
class BankProfile {
 public:
  static BankProfile from_components(Eur ildc_avg, Eur sc_avg, Eur fc_avg);
  static BankProfile from_bi(Eur bi_direct);

  const std::optional<BiComponents>& components() const { return components_; }
  const std::optional<Eur>& bi_direct() const { return bi_direct_; }

 private:
  BankProfile() = default;
  std::optional<BiComponents> components_;
  std::optional<Eur> bi_direct_;
};

struct LossEvent {
  Eur amount = 0.0;
  int year = 0;
};

/// Loss events inside a window of `window_years` calendar years ending at
/// `last_year`. Events below the collection floor are dropped on construction.
class LossHistory {
 public:
  /// `last_year` defaults to the latest event year (or 0 for an empty history).
  /// Throws InvalidInput for non-positive amounts, window_years < 1 or events
  /// outside the window.
  explicit LossHistory(std::vector<LossEvent> events, int window_years = kLcWindowYears,
                       std::optional<int> last_year = std::nullopt);

  const std::vector<LossEvent>& events() const { return events_; }
  int window_years() const { return window_years_; }
  int last_year() const { return last_year_; }
  int first_year() const { return last_year_ - window_years_ + 1; }
  std::size_t dropped_below_floor() const { return dropped_below_floor_; }
  std::vector<Eur> amounts() const;

 private:
  std::vector<LossEvent> events_;
  int window_years_;
  int last_year_;
  std::size_t dropped_below_floor_ = 0;
};

/// Piecewise-linear BI -> BIC schedule. Each bucket starts at `lower` and
/// applies its marginal `rate` up to the next bucket's lower edge.
class BicSchedule {
 public:
  struct Bucket {
    Eur lower;
    double rate;
  };

  /// Throws InvalidInput unless the first bucket starts at 0, edges increase
  /// and rates are positive.
  explicit BicSchedule(std::vector<Bucket> buckets);

  /// The five-bucket schedule of the 2016 consultative document.
  static const BicSchedule& standard();

  Eur bic(Eur bi) const;
  /// Inverse of bic(); the schedule is strictly increasing.
  Eur bi(Eur bic) const;
  const std::vector<Bucket>& buckets() const { return buckets_; }

 private:
  std::vector<Bucket> buckets_;
  std::vector<Eur> offsets_;  // BIC at each bucket's lower edge
};

struct AlphaFractions {
  double alpha_10 = 0.0;
  double alpha_100 = 0.0;
};

struct SmaBreakdown {
  Eur bi = 0.0;
  Eur bic = 0.0;
  Eur lc = 0.0;
  /// Undefined for a loss-free history.
  std::optional<double> alpha_star;
  /// Average annual loss over the window.
  Eur el = 0.0;
  Eur sma = 0.0;
  /// Set when the window is shorter than ten years; LC still divides by ten.
  bool short_window = false;
};

Eur compute_bi(const BankProfile& profile);
Eur compute_bic(Eur bi, const BicSchedule& schedule = BicSchedule::standard());

/// LC = (7 sum x + 7 sum x 1{x > 10m} + 5 sum x 1{x > 100m}) / 10.
Eur compute_lc(std::span<const Eur> amounts);
Eur compute_lc(const LossHistory& history);

/// Throws DomainError when the history has no losses.
AlphaFractions alpha_fractions(std::span<const Eur> amounts);
AlphaFractions alpha_fractions(const LossHistory& history);

/// 7 + 7 alpha_10 + 5 alpha_100. Requires 0 <= alpha_100 <= alpha_10 <= 1.
double alpha_star(double alpha_10, double alpha_100);
double alpha_star(const AlphaFractions& fractions);

/// SMA = BIC below 1bn of BI, otherwise 110m + (BIC - 110m) ln(e - 1 + LC / BIC).
Eur compute_sma(Eur bi, Eur bic, Eur lc);

SmaBreakdown sma_breakdown(const BankProfile& profile, const LossHistory& history,
                           const BicSchedule& schedule = BicSchedule::standard());

struct CurvePoint {
  double x;
  double y;
};

/// SMA/EL as a function of r = LC/BIC at fixed alpha*.
///
/// Without `exact_bic` the large-bank asymptote alpha* ln(e - 1 + r) / r is
/// returned (the 110m offset is dropped). With `exact_bic` the full formula
/// is evaluated at that BIC. Non-positive ratios are skipped.
std::vector<CurvePoint> sma_el_curve(double alpha_star, std::span<const double> lc_over_bic,
                                     std::optional<Eur> exact_bic = std::nullopt);

/// SMA(alpha* = 19) / SMA(alpha* = 7) as a function of u = EL/BIC, same
/// asymptotic/exact convention as sma_el_curve.
std::vector<CurvePoint> alpha_ratio_curve(std::span<const double> el_over_bic,
                                          std::optional<Eur> exact_bic = std::nullopt);

}  // namespace oprisk
