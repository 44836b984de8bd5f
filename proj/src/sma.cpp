#include "oprisk/sma.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "oprisk/errors.hpp"

namespace oprisk {

namespace {

constexpr double kE = std::numbers::e;

void require_nonnegative(Eur value, const char* name) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw InvalidInput(std::string(name) + " must be a finite non-negative amount");
  }
}

struct LossSums {
  Eur total = 0.0;
  Eur above_low = 0.0;
  Eur above_high = 0.0;
};

LossSums loss_sums(std::span<const Eur> amounts) {
  LossSums s;
  for (Eur x : amounts) {
    s.total += x;
    if (x > kLcThresholdLow) s.above_low += x;
    if (x > kLcThresholdHigh) s.above_high += x;
  }
  return s;
}

}  // namespace

BankProfile BankProfile::from_components(Eur ildc_avg, Eur sc_avg, Eur fc_avg) {
  require_nonnegative(ildc_avg, "ildc_avg");
  require_nonnegative(sc_avg, "sc_avg");
  require_nonnegative(fc_avg, "fc_avg");
  BankProfile p;
  p.components_ = BiComponents{ildc_avg, sc_avg, fc_avg};
  return p;
}

BankProfile BankProfile::from_bi(Eur bi_direct) {
  require_nonnegative(bi_direct, "bi_direct");
  BankProfile p;
  p.bi_direct_ = bi_direct;
  return p;
}

LossHistory::LossHistory(std::vector<LossEvent> events, int window_years,
                         std::optional<int> last_year)
    : window_years_(window_years) {
  if (window_years < 1) throw InvalidInput("window_years must be at least 1");
  if (last_year) {
    last_year_ = *last_year;
  } else if (events.empty()) {
    last_year_ = 0;
  } else {
    last_year_ = std::max_element(events.begin(), events.end(), [](auto& a, auto& b) {
                   return a.year < b.year;
                 })->year;
  }
  events_.reserve(events.size());
  for (const LossEvent& e : events) {
    if (!(e.amount > 0.0) || !std::isfinite(e.amount)) {
      throw InvalidInput("loss amount must be positive, got " + std::to_string(e.amount));
    }
    if (e.year < first_year() || e.year > last_year_) {
      throw InvalidInput("loss year " + std::to_string(e.year) + " outside window " +
                         std::to_string(first_year()) + "-" + std::to_string(last_year_));
    }
    if (e.amount < kCollectionFloor) {
      ++dropped_below_floor_;
      continue;
    }
    events_.push_back(e);
  }
}

std::vector<Eur> LossHistory::amounts() const {
  std::vector<Eur> out;
  out.reserve(events_.size());
  for (const LossEvent& e : events_) out.push_back(e.amount);
  return out;
}

BicSchedule::BicSchedule(std::vector<Bucket> buckets) : buckets_(std::move(buckets)) {
  if (buckets_.empty() || buckets_.front().lower != 0.0) {
    throw InvalidInput("BIC schedule must start with a bucket at BI = 0");
  }
  offsets_.reserve(buckets_.size());
  Eur offset = 0.0;
  for (std::size_t i = 0; i < buckets_.size(); ++i) {
    if (!(buckets_[i].rate > 0.0)) throw InvalidInput("BIC schedule rates must be positive");
    if (i > 0) {
      if (!(buckets_[i].lower > buckets_[i - 1].lower)) {
        throw InvalidInput("BIC schedule bucket edges must increase");
      }
      offset += buckets_[i - 1].rate * (buckets_[i].lower - buckets_[i - 1].lower);
    }
    offsets_.push_back(offset);
  }
}

const BicSchedule& BicSchedule::standard() {
  static const BicSchedule schedule({
      {0.0, 0.11},
      {1.0 * kBillion, 0.15},
      {3.0 * kBillion, 0.19},
      {10.0 * kBillion, 0.23},
      {30.0 * kBillion, 0.29},
  });
  return schedule;
}

Eur BicSchedule::bic(Eur bi) const {
  require_nonnegative(bi, "BI");
  std::size_t i = buckets_.size() - 1;
  while (bi < buckets_[i].lower) --i;
  return offsets_[i] + buckets_[i].rate * (bi - buckets_[i].lower);
}

Eur BicSchedule::bi(Eur bic) const {
  require_nonnegative(bic, "BIC");
  std::size_t i = buckets_.size() - 1;
  while (bic < offsets_[i]) --i;
  return buckets_[i].lower + (bic - offsets_[i]) / buckets_[i].rate;
}

Eur compute_bi(const BankProfile& profile) {
  if (profile.bi_direct()) return *profile.bi_direct();
  const BiComponents& c = *profile.components();
  return c.ildc_avg + c.sc_avg + c.fc_avg;
}

Eur compute_bic(Eur bi, const BicSchedule& schedule) { return schedule.bic(bi); }

Eur compute_lc(std::span<const Eur> amounts) {
  const LossSums s = loss_sums(amounts);
  return (7.0 * s.total + 7.0 * s.above_low + 5.0 * s.above_high) / kLcWindowYears;
}

Eur compute_lc(const LossHistory& history) {
  const std::vector<Eur> a = history.amounts();
  return compute_lc(a);
}

AlphaFractions alpha_fractions(std::span<const Eur> amounts) {
  const LossSums s = loss_sums(amounts);
  if (!(s.total > 0.0)) throw DomainError("loss fractions undefined for zero total loss");
  return {s.above_low / s.total, s.above_high / s.total};
}

AlphaFractions alpha_fractions(const LossHistory& history) {
  const std::vector<Eur> a = history.amounts();
  return alpha_fractions(a);
}

double alpha_star(double alpha_10, double alpha_100) {
  if (!(alpha_100 >= 0.0 && alpha_100 <= alpha_10 && alpha_10 <= 1.0)) {
    throw InvalidInput("alpha fractions must satisfy 0 <= alpha_100 <= alpha_10 <= 1");
  }
  return 7.0 + 7.0 * alpha_10 + 5.0 * alpha_100;
}

double alpha_star(const AlphaFractions& f) { return alpha_star(f.alpha_10, f.alpha_100); }

Eur compute_sma(Eur bi, Eur bic, Eur lc) {
  require_nonnegative(bi, "BI");
  require_nonnegative(lc, "LC");
  if (bi < kLossComponentBi) return bic;
  if (!(bic > 0.0)) throw InvalidInput("BIC must be positive when BI >= 1bn");
  return kSmaOffset + (bic - kSmaOffset) * std::log(kE - 1.0 + lc / bic);
}

SmaBreakdown sma_breakdown(const BankProfile& profile, const LossHistory& history,
                           const BicSchedule& schedule) {
  const std::vector<Eur> amounts = history.amounts();
  SmaBreakdown b;
  b.bi = compute_bi(profile);
  b.bic = compute_bic(b.bi, schedule);
  b.lc = compute_lc(amounts);
  if (!amounts.empty()) b.alpha_star = alpha_star(alpha_fractions(amounts));
  Eur total = 0.0;
  for (Eur x : amounts) total += x;
  b.el = total / history.window_years();
  b.sma = compute_sma(b.bi, b.bic, b.lc);
  b.short_window = history.window_years() < kLcWindowYears;
  return b;
}

std::vector<CurvePoint> sma_el_curve(double alpha_star, std::span<const double> lc_over_bic,
                                     std::optional<Eur> exact_bic) {
  if (!(alpha_star >= 7.0 && alpha_star <= 19.0)) {
    throw InvalidInput("alpha* must lie in [7, 19]");
  }
  std::vector<CurvePoint> out;
  out.reserve(lc_over_bic.size());
  for (double r : lc_over_bic) {
    if (!(r > 0.0)) continue;
    const double log_term = std::log(kE - 1.0 + r);
    double ratio;
    if (exact_bic) {
      const Eur bic = *exact_bic;
      const Eur el = r * bic / alpha_star;
      ratio = (kSmaOffset + (bic - kSmaOffset) * log_term) / el;
    } else {
      ratio = alpha_star * log_term / r;
    }
    out.push_back({r, ratio});
  }
  return out;
}

std::vector<CurvePoint> alpha_ratio_curve(std::span<const double> el_over_bic,
                                          std::optional<Eur> exact_bic) {
  std::vector<CurvePoint> out;
  out.reserve(el_over_bic.size());
  for (double u : el_over_bic) {
    if (!(u > 0.0)) throw InvalidInput("EL/BIC must be positive");
    const double high = std::log(kE - 1.0 + 19.0 * u);
    const double low = std::log(kE - 1.0 + 7.0 * u);
    double ratio;
    if (exact_bic) {
      const Eur scale = *exact_bic - kSmaOffset;
      ratio = (kSmaOffset + scale * high) / (kSmaOffset + scale * low);
    } else {
      ratio = high / low;
    }
    out.push_back({u, ratio});
  }
  return out;
}

}  // namespace oprisk
