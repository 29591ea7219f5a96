#pragma once

#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "impactlab/trades.hpp"
#include "impactlab/types.hpp"

namespace impactlab::impact {

using Pair = std::pair<double, double>;  // (omega, r)

struct Bin {
  double mean_omega{};
  double mean_r{};
  std::uint64_t count{};
};

struct ImpactCurve {
  std::string stock;  // stock code, or "ALL" for market-aggregated curves
  std::string type;   // PB, PS, FB, FS, AllBuy, AllSell
  bool normalized = false;
  std::vector<Bin> bins;
};

/// Equal-count binning over the omega axis: pairs are stable-sorted by
/// omega (ties keep input order) and split into n_bins contiguous runs of
/// size floor(n/k) or ceil(n/k), extras going to the leading bins; per-bin
/// arithmetic means.
ImpactCurve bin_equal_count(std::span<const Pair> pairs, int n_bins);

/// Average-normalization: (omega, r) -> (omega/<omega>, r/<r>). The means
/// are the per-stock, per-type normalizers; mean_r == 0 is the
/// ZeroMeanReturn condition.
std::vector<Pair> normalize_pairs(std::span<const Pair> pairs, double mean_r,
                                  double mean_omega);

struct FitRange {
  double omega_lo = 0.0;
  double omega_hi = std::numeric_limits<double>::infinity();
};

struct PowerLawFit {
  double prefactor{};
  double exponent{};
  double exponent_stderr{};
  double omega_lo{};
  double omega_hi{};
  int n_bins_used{};
};

/// Least squares on (log mean_omega, log mean_r) over bins inside the range;
/// bins with non-positive mean_r are excluded. Needs >= 5 usable bins.
PowerLawFit fit_power_law(const ImpactCurve& curve, FitRange range = {});

/// Sensitivity variant: the same log-log regression on raw pairs instead of
/// binned means.
PowerLawFit fit_power_law_points(std::span<const Pair> pairs,
                                 FitRange range = {});

/// Mean return of a bin mixing partially filled and filled trades, where x
/// is the filled proportion: r = r_p * (1 - x) + r_f * x.
double mixture_return(double r_p, double r_f, double x);

/// Condition for the anomalous negative correlation between adjacent bins
/// 1 (smaller omega) and 2: the mixture means satisfy r_1 > r_2 iff
/// x_2 * (r_p2 - r_f2) > x_1 * (r_p1 - r_f1) when r_p1 == r_p2. Both gaps
/// must be positive.
bool anomaly_condition(double r_p1, double r_f1, double r_p2, double r_f2,
                       double x1, double x2);

struct StockTrades {
  std::string stock;
  std::span<const trades::Trade> trades;
};

struct CurveSet {
  std::vector<ImpactCurve> per_stock_raw;         // |r| vs omega, per type
  std::vector<ImpactCurve> per_stock_normalized;  // r/<r> vs omega/<omega>
  std::vector<ImpactCurve> aggregated;            // pooled normalized, plus
                                                  // AllBuy/AllSell mixtures
  std::uint64_t cells_skipped_small = 0;          // fewer points than bins
  std::uint64_t cells_skipped_zero_mean = 0;      // ZeroMeanReturn
};

/// Builds the full curve family. Per-type aggregation pools normalized
/// pairs across stocks before re-binning. AllBuy/AllSell pool filled and
/// partially filled trades of one direction, with omega kept in raw shares
/// and |r| normalized by the stock's direction-pooled mean.
CurveSet build_all_curves(std::span<const StockTrades> stocks, int n_bins);

}  // namespace impactlab::impact
