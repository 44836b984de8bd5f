// Acceptance run: one PASS/FAIL line per criterion, reference values from
// the published table embedded below. Exit status is the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "oprisk/aggregate.hpp"
#include "oprisk/calibration.hpp"
#include "oprisk/experiments.hpp"
#include "oprisk/sma.hpp"
#include "oracles.hpp"

using namespace oprisk;

namespace {

struct Reference {
  double bi_bn, mu, sigma;
  LcQuantile q;
  double lc_bn, lambda, alpha_star, el_bn, sma_bn, var_bn, sma_over_var, nines;
};

// Published Table 2 (BI in bn EUR; all quantities conditional on losses above 10k).
const Reference kTable[] = {
#include "table2_reference.inc"
};

constexpr double kBicTol = 1e-9;          // relative
constexpr double kSmaTolBn = 0.001;       // absolute, bn
constexpr double kAlphaTol = 0.1;         // absolute
constexpr double kLambdaElTol = 0.01;     // relative, at the published precision
constexpr double kLcTol = 0.005;          // relative
constexpr double kVarTol = 0.05;          // relative
constexpr double kNinesTol = 0.2;         // absolute
constexpr double kCurveTol = 0.02;        // relative
constexpr double kGapTarget = 3.5, kGapTol = 0.3;
constexpr std::size_t kPassTarget = 134, kPassTol = 10;
constexpr double kCovShare = 0.90;
constexpr std::uint64_t kSeed = 20170301;

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, const std::function<Outcome()>& check) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  fmt::print("{} [{}] {}: {} ({:.1f}s)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail, secs);
  std::fflush(stdout);
}

double round_to(double x, double unit) { return std::round(x / unit) * unit; }

std::string cell(const Reference& r) {
  return fmt::format("BI {} mu {} sigma {} {}", r.bi_bn, r.mu, r.sigma, to_string(r.q));
}

std::vector<Table2Row> rows;

}  // namespace

int main() {
  StudySettings settings;

  report(1, "BIC schedule", [] {
    double worst = 0;
    for (auto [bi, bic] : {std::pair{8.0, 1.36}, {20.0, 4.04}, {40.0, 9.24}}) {
      worst = std::max(worst, std::abs(compute_bic(bi * kBillion) - bic * kBillion) / (bic * kBillion));
    }
    return Outcome{worst <= kBicTol, fmt::format("max rel err {:.2e} (tol {:.0e})", worst, kBicTol)};
  });

  report(2, "SMA column", [] {
    const double expected[] = {0.980, 1.185, 1.615, 3.108, 4.279, 6.740, 8.299, 13.091, 22.127};
    double worst = 0;
    int i = 0;
    for (double bi : {8.0, 20.0, 40.0}) {
      const Eur bic = compute_bic(bi * kBillion);
      for (LcQuantile q : {LcQuantile::Low, LcQuantile::Median, LcQuantile::High}) {
        const auto& ref = *std::find_if(std::begin(kTable), std::end(kTable),
                                        [&](auto& r) { return r.bi_bn == bi && r.q == q; });
        const Eur lc_model = lc_quantile_given_bic(bic, quantile_level(q), RegressionParams{});
        for (Eur lc : {ref.lc_bn * kBillion, lc_model}) {
          worst = std::max(worst, std::abs(compute_sma(bi * kBillion, bic, lc) / kBillion - expected[i]));
        }
        ++i;
      }
    }
    return Outcome{worst <= kSmaTolBn,
                   fmt::format("9 pairs, max abs err {:.4f} bn (tol {})", worst, kSmaTolBn)};
  });

  report(3, "analytic columns (alpha*, lambda, EL)", [&] {
    // Runs the full table study; later criteria reuse the rows.
    rows = table2_study(table2_standard_inputs(), settings);
    double wa = 0, wl = 0, we = 0, raw_l = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      const auto& p = kTable[i];
      wa = std::max(wa, std::abs(r.alpha_star - p.alpha_star));
      wl = std::max(wl, std::abs(round_to(r.lambda, 1) - p.lambda) / p.lambda);
      raw_l = std::max(raw_l, std::abs(r.lambda - p.lambda) / p.lambda);
      we = std::max(we, std::abs(round_to(r.el / kBillion, 0.001) - p.el_bn) / p.el_bn);
    }
    const bool ok = rows.size() == 54 && wa <= kAlphaTol && wl <= kLambdaElTol && we <= kLambdaElTol;
    return Outcome{ok, fmt::format("{} rows; max |d alpha*| {:.3f}, lambda rel {:.4f} (unrounded {:.3f}), "
                                   "EL rel {:.4f}",
                                   rows.size(), wa, wl, raw_l, we)};
  });

  report(4, "LC quantile inversion", [&] {
    double worst = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      worst = std::max(worst, std::abs(rows[i].lc / kBillion - kTable[i].lc_bn) / kTable[i].lc_bn);
    }
    return Outcome{worst <= kLcTol, fmt::format("max rel err {:.5f} (tol {})", worst, kLcTol)};
  });

  report(5, "VaR and #9's by FFT", [&] {
    const auto t0 = std::chrono::steady_clock::now();
    auto again = table2_study(table2_standard_inputs(), settings);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    double wv = 0, wn = 0;
    std::string misses;
    for (std::size_t i = 0; i < again.size(); ++i) {
      const double dv = std::abs(again[i].var999 / kBillion - kTable[i].var_bn) / kTable[i].var_bn;
      const double dn = std::abs(again[i].nines - kTable[i].nines);
      wv = std::max(wv, dv);
      wn = std::max(wn, dn);
      if (dv > kVarTol || dn > kNinesTol) {
        misses += fmt::format("; {}: VaR {:.3f} vs {:.3f}, #9's {:.2f} vs {:.1f}", cell(kTable[i]),
                              again[i].var999 / kBillion, kTable[i].var_bn, again[i].nines,
                              kTable[i].nines);
      }
    }
    const bool ok = wv <= kVarTol && wn <= kNinesTol && secs < 300;
    return Outcome{ok, fmt::format("max VaR rel err {:.4f} (tol {}), max #9's err {:.2f} (tol {}), "
                                   "n_points 2^20 in {:.0f}s{}",
                                   wv, kVarTol, wn, kNinesTol, secs, misses)};
  });

  report(6, "SMA/EL and alpha* ratio curves", [] {
    const std::vector<double> r{0.5, 2.0};
    const auto hi = sma_el_curve(19, r);
    const auto lo = sma_el_curve(7, r);
    std::vector<double> u;
    for (int k = 1; k <= 100'000; ++k) u.push_back(k * 1e-4);
    double top = 0, arg = 0;
    for (const auto& p : alpha_ratio_curve(u)) {
      if (p.y > top) {
        top = p.y;
        arg = p.x;
      }
    }
    auto near = [](double x, double target) { return std::abs(x - target) <= kCurveTol * target; };
    const bool ok = near(hi[0].y, 30) && near(hi[1].y, 12.5) && near(lo[0].y, 11) && lo[1].y < 5 &&
                    near(top, 1.5) && std::abs(arg - 0.2) <= 0.05 && top <= 1.5 * (1 + kCurveTol);
    return Outcome{ok, fmt::format("a*=19: {:.3f} -> {:.3f}; a*=7: {:.3f} -> {:.3f}; ratio max {:.4f} "
                                   "at EL/BIC {:.3f}",
                                   hi[0].y, hi[1].y, lo[0].y, lo[1].y, top, arg)};
  });

  report(7, "VaR-EL common-slope regression", [&] {
    const auto fit = var_el_regression(rows);
    const double gap = fit.gap();
    return Outcome{std::abs(gap - kGapTarget) <= kGapTol,
                   fmt::format("{} groups, slope {:.3f}, gap {:.3f} (exp {:.1f}x) between a* {} and {}",
                               fit.groups.size(), fit.slope, gap, std::exp(gap),
                               fit.groups.front().alpha_star, fit.groups.back().alpha_star)};
  });

  report(8, "grid study census", [&] {
    auto t0 = std::chrono::steady_clock::now();
    const auto full = grid_study(GridSpec::standard(kSeed), settings);
    const double full_secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    t0 = std::chrono::steady_clock::now();
    const auto smoke = grid_study(GridSpec::smoke(kSeed), settings);
    const double smoke_secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::size_t passed = full.passed_count();
    const double share = full.share_sma_more_variable();
    const bool ok = full.combinations.size() == 315 &&
                    passed + kPassTol >= kPassTarget && passed <= kPassTarget + kPassTol &&
                    share >= kCovShare && smoke_secs < 300 && full_secs < 3600;
    return Outcome{ok, fmt::format("{} screened, {} pass (target {} +/- {}), CoV(SMA) > CoV(SLA) in "
                                   "{:.1f}% at 100 reps; full {:.0f}s, smoke {:.0f}s ({} pass)",
                                   full.combinations.size(), passed, kPassTarget, kPassTol,
                                   100 * share, full_secs, smoke_secs, smoke.passed_count())};
  });

  report(9, "property suites", [&] {
    std::vector<std::string> failed;
    auto expect = [&](bool cond, const std::string& what) {
      if (!cond) failed.push_back(what);
    };

    // Compound mean conservation.
    for (const CompoundModel& m : {CompoundModel{{8, 1.5, 0}, 20}, CompoundModel{{9, 2.1, 10'000}, 323},
                                   CompoundModel{{10, 2, 10'000}, 2367}}) {
      expect(aggregate_fft(m).mean_conservation_error() < 0.005, "mean conservation");
    }

    // FFT quantile inside the Monte Carlo quantile +/- 3 bootstrap SE.
    const CompoundModel mc_cases[] = {{{8, 1.5, 0}, 20}, {{9, 2, 0}, 10}, {{9, 2.1, 10'000}, 5}};
    std::uint64_t seed = kSeed;
    for (const auto& m : mc_cases) {
      const auto& s = m.severity;
      const auto totals = oracle::simulate_annual_totals(s.mu, s.sigma, s.truncation, m.lambda,
                                                         10'000'000, ++seed);
      const auto q = oracle::quantile_with_bootstrap(totals, 0.999);
      const auto agg = aggregate_fft(m);
      expect(std::abs(var_quantile(agg, 0.999) - q.value) <= 3 * q.bootstrap_se + agg.grid_step(),
             fmt::format("FFT vs MC (mu {}, sigma {})", s.mu, s.sigma));
    }

    // Likelihood gradient against central differences, MLE consistency and equivariance.
    std::mt19937_64 rng(kSeed);
    std::lognormal_distribution<double> draw(9, 2.1);
    std::vector<Eur> xs;
    while (xs.size() < 100'000) {
      const double x = draw(rng);
      if (x > 10'000) xs.push_back(x);
    }
    const TruncatedLognormalLikelihood ll(xs, 10'000);
    std::uniform_real_distribution<double> mu_d(6, 12), sigma_d(0.8, 3.5);
    for (int i = 0; i < 20; ++i) {
      const double mu = mu_d(rng), sigma = sigma_d(rng), h = 1e-5;
      const auto g = ll.gradient(mu, sigma);
      const double fm = (ll.value(mu + h, sigma) - ll.value(mu - h, sigma)) / (2 * h);
      const double fs = (ll.value(mu, sigma + h) - ll.value(mu, sigma - h)) / (2 * h);
      expect(std::abs(g[0] - fm) <= 1e-5 * std::max(1.0, std::abs(fm)) &&
                 std::abs(g[1] - fs) <= 1e-5 * std::max(1.0, std::abs(fs)),
             "gradient vs finite differences");
    }
    const auto fit = fit_truncated_lognormal(xs, 10'000);
    expect(fit.converged && std::abs(fit.mu_hat - 9) < 0.05 && std::abs(fit.sigma_hat - 2.1) < 0.03,
           "MLE consistency");
    std::vector<Eur> scaled;
    for (double x : xs) scaled.push_back(7.5 * x);
    const auto fit_scaled = fit_truncated_lognormal(scaled, 75'000);
    expect(std::abs(fit_scaled.mu_hat - fit.mu_hat - std::log(7.5)) < 1e-8 &&
               std::abs(fit_scaled.sigma_hat - fit.sigma_hat) < 1e-8,
           "MLE scale equivariance");

    // SMA fixed point and alpha* bounds.
    for (double bi = 1e9; bi < 1e11; bi *= 1.37) {
      const Eur bic = compute_bic(bi);
      expect(std::abs(compute_sma(bi, bic, bic) - bic) <= 1e-12 * bic, "SMA fixed point");
    }
    std::lognormal_distribution<double> wide(14, 3);
    for (int t = 0; t < 1000; ++t) {
      std::vector<Eur> sample(1 + t % 25);
      for (auto& x : sample) x = wide(rng);
      const double a = alpha_star(alpha_fractions(sample));
      expect(a >= 7 && a <= 19, "empirical alpha* in [7, 19]");
    }
    for (double mu = 8; mu <= 12; mu += 0.5) {
      for (double sigma = 1; sigma <= 4; sigma += 0.5) {
        const double a = alpha_star_analytic({mu, sigma, 10'000});
        expect(a >= 7 && a <= 19, "analytic alpha* in [7, 19]");
      }
    }

    // Determinism across worker counts.
    GridSpec spec;
    spec.mu_values = {9, 10};
    spec.sigma_values = {2};
    spec.lambda_values = {1000};
    spec.replications = 5;
    spec.seed = kSeed;
    StudySettings one = settings, four = settings;
    one.threads = 1;
    four.threads = 4;
    const auto a = grid_study(spec, one);
    const auto b = grid_study(spec, four);
    for (std::size_t i = 0; i < a.combinations.size(); ++i) {
      for (std::size_t r = 0; r < a.combinations[i].replications.size(); ++r) {
        const auto& x = a.combinations[i].replications[r];
        const auto& y = b.combinations[i].replications[r];
        expect(x.sim_lc == y.sim_lc && x.sampled_bic == y.sampled_bic && x.sma == y.sma &&
                   (x.sla == y.sla || (std::isnan(x.sla) && std::isnan(y.sla))),
               "determinism under a fixed seed");
      }
    }

    std::sort(failed.begin(), failed.end());
    failed.erase(std::unique(failed.begin(), failed.end()), failed.end());
    std::string detail = "mean conservation, FFT vs MC (3 cases, 1e7 years), gradient vs FD, "
                         "MLE consistency and equivariance, SMA fixed point, alpha* bounds, determinism";
    for (const auto& f : failed) detail += "; failed: " + f;
    return Outcome{failed.empty(), detail};
  });

  fmt::print("{} of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
