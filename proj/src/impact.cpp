#include "impactlab/impact.hpp"

#include <algorithm>
#include <cmath>

#include "impactlab/stats.hpp"

namespace impactlab::impact {

ImpactCurve bin_equal_count(std::span<const Pair> pairs, int n_bins) {
  if (n_bins < 2) throw Error("bin_equal_count needs n_bins >= 2");
  const std::size_t n = pairs.size();
  if (n < static_cast<std::size_t>(n_bins))
    throw TooFewPoints("bin_equal_count: " + std::to_string(n) +
                       " points for " + std::to_string(n_bins) + " bins");

  std::vector<Pair> sorted(pairs.begin(), pairs.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const Pair& a, const Pair& b) { return a.first < b.first; });

  ImpactCurve curve;
  const std::size_t k = static_cast<std::size_t>(n_bins);
  const std::size_t base = n / k;
  const std::size_t extra = n % k;
  std::size_t at = 0;
  for (std::size_t b = 0; b < k; ++b) {
    const std::size_t len = base + (b < extra ? 1 : 0);
    double sw = 0.0, sr = 0.0;
    for (std::size_t i = at; i < at + len; ++i) {
      sw += sorted[i].first;
      sr += sorted[i].second;
    }
    curve.bins.push_back({sw / static_cast<double>(len),
                          sr / static_cast<double>(len), len});
    at += len;
  }
  return curve;
}

std::vector<Pair> normalize_pairs(std::span<const Pair> pairs, double mean_r,
                                  double mean_omega) {
  if (mean_r == 0.0) throw ZeroMeanReturn("normalize_pairs: <r> == 0");
  if (!(mean_omega > 0.0)) throw Error("normalize_pairs: <omega> must be > 0");
  std::vector<Pair> out;
  out.reserve(pairs.size());
  for (const Pair& p : pairs)
    out.emplace_back(p.first / mean_omega, p.second / mean_r);
  return out;
}

namespace {

PowerLawFit fit_loglog(std::span<const double> lw, std::span<const double> lr,
                       double lo, double hi) {
  const stats::OlsFit ols = stats::ols(lw, lr);
  PowerLawFit fit;
  fit.prefactor = std::exp(ols.intercept);
  fit.exponent = ols.slope;
  fit.exponent_stderr = ols.slope_stderr;
  fit.omega_lo = lo;
  fit.omega_hi = hi;
  fit.n_bins_used = static_cast<int>(ols.n);
  return fit;
}

}  // namespace

PowerLawFit fit_power_law(const ImpactCurve& curve, FitRange range) {
  std::vector<double> lw, lr;
  for (const Bin& b : curve.bins) {
    if (b.mean_omega < range.omega_lo || b.mean_omega > range.omega_hi)
      continue;
    if (!(b.mean_r > 0.0)) continue;  // NonPositiveMeanReturn bins excluded
    lw.push_back(std::log(b.mean_omega));
    lr.push_back(std::log(b.mean_r));
  }
  if (lw.size() < 5)
    throw TooFewPoints("fit_power_law: " + std::to_string(lw.size()) +
                       " usable bins, need >= 5");
  return fit_loglog(lw, lr, range.omega_lo, range.omega_hi);
}

PowerLawFit fit_power_law_points(std::span<const Pair> pairs, FitRange range) {
  std::vector<double> lw, lr;
  for (const Pair& p : pairs) {
    if (p.first < range.omega_lo || p.first > range.omega_hi) continue;
    if (!(p.second > 0.0)) continue;
    lw.push_back(std::log(p.first));
    lr.push_back(std::log(p.second));
  }
  if (lw.size() < 5)
    throw TooFewPoints("fit_power_law_points: too few usable pairs");
  return fit_loglog(lw, lr, range.omega_lo, range.omega_hi);
}

double mixture_return(double r_p, double r_f, double x) {
  return r_p * (1.0 - x) + r_f * x;
}

bool anomaly_condition(double r_p1, double r_f1, double r_p2, double r_f2,
                       double x1, double x2) {
  const double gap1 = r_p1 - r_f1;
  const double gap2 = r_p2 - r_f2;
  if (gap1 <= 0.0 || gap2 <= 0.0)
    throw DegenerateDenominator("anomaly_condition: non-positive gap");
  return x2 * gap2 > x1 * gap1;
}

namespace {

std::vector<Pair> type_pairs(std::span<const trades::Trade> ts,
                             trades::TradeType type) {
  std::vector<Pair> out;
  for (const trades::Trade& t : ts)
    if (t.type() == type)
      out.emplace_back(static_cast<double>(t.omega), std::abs(t.r));
  return out;
}

}  // namespace

CurveSet build_all_curves(std::span<const StockTrades> stocks, int n_bins) {
  CurveSet set;
  std::map<std::string, std::vector<Pair>> pooled;          // per type
  std::map<std::string, std::vector<Pair>> pooled_mixture;  // AllBuy/AllSell

  for (const StockTrades& st : stocks) {
    const trades::ClassifyResult cls = trades::classify_counts(st.trades);

    for (int ti = 0; ti < 4; ++ti) {
      const auto type = static_cast<trades::TradeType>(ti);
      const std::string name = trades::kTradeTypeNames[ti];
      const trades::TypeStats& cell = cls.by_type[ti];
      std::vector<Pair> raw = type_pairs(st.trades, type);
      if (raw.size() < static_cast<std::size_t>(n_bins)) {
        ++set.cells_skipped_small;
        continue;
      }

      ImpactCurve raw_curve = bin_equal_count(raw, n_bins);
      raw_curve.stock = st.stock;
      raw_curve.type = name;
      set.per_stock_raw.push_back(std::move(raw_curve));

      if (cell.mean_r == 0.0) {
        ++set.cells_skipped_zero_mean;
        continue;
      }
      // |r| / |<r>| equals r / <r> for single-sign cells.
      std::vector<Pair> norm =
          normalize_pairs(raw, std::abs(cell.mean_r), cell.mean_omega);
      ImpactCurve norm_curve = bin_equal_count(norm, n_bins);
      norm_curve.stock = st.stock;
      norm_curve.type = name;
      norm_curve.normalized = true;
      set.per_stock_normalized.push_back(std::move(norm_curve));

      auto& pool = pooled[name];
      pool.insert(pool.end(), norm.begin(), norm.end());
    }

    // Direction-pooled mixtures keep omega in raw shares; |r| is scaled by
    // the stock's direction-pooled mean so stocks are comparable.
    for (const auto dir :
         {trades::Direction::BuyerInit, trades::Direction::SellerInit}) {
      const bool buy = dir == trades::Direction::BuyerInit;
      std::vector<Pair> prs;
      double sum_abs_r = 0.0;
      for (const trades::Trade& t : st.trades) {
        if (t.direction != dir) continue;
        prs.emplace_back(static_cast<double>(t.omega), std::abs(t.r));
        sum_abs_r += std::abs(t.r);
      }
      if (prs.empty() || sum_abs_r == 0.0) continue;
      const double mean_abs_r = sum_abs_r / static_cast<double>(prs.size());
      auto& pool = pooled_mixture[buy ? "AllBuy" : "AllSell"];
      for (const Pair& p : prs)
        pool.emplace_back(p.first, p.second / mean_abs_r);
    }
  }

  for (auto& [name, pool] : pooled) {
    if (pool.size() < static_cast<std::size_t>(n_bins)) {
      ++set.cells_skipped_small;
      continue;
    }
    ImpactCurve curve = bin_equal_count(pool, n_bins);
    curve.stock = "ALL";
    curve.type = name;
    curve.normalized = true;
    set.aggregated.push_back(std::move(curve));
  }
  for (auto& [name, pool] : pooled_mixture) {
    if (pool.size() < static_cast<std::size_t>(n_bins)) {
      ++set.cells_skipped_small;
      continue;
    }
    ImpactCurve curve = bin_equal_count(pool, n_bins);
    curve.stock = "ALL";
    curve.type = name;
    curve.normalized = true;
    set.aggregated.push_back(std::move(curve));
  }
  return set;
}

}  // namespace impactlab::impact
