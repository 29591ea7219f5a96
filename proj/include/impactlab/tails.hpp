#pragma once

#include <span>
#include <utility>
#include <vector>

#include "impactlab/impact.hpp"
#include "impactlab/types.hpp"

namespace impactlab::tails {

/// Empirical complementary CDF at the sorted unique sample values, with
/// Pr(X > x_(i)) = (n - i)/n where i counts sample points <= x_(i).
std::vector<std::pair<double, double>> ccdf(std::span<const double> sample);

enum class TailMethod : std::uint8_t { CcdfOls, Hill };

struct TailFit {
  double exponent{};
  double exponent_stderr{};
  double x_lo{};
  double x_hi{};
  std::size_t n_tail{};  // sample points inside the scaling range
  TailMethod method{TailMethod::CcdfOls};
  bool upper_bound_ignored = false;  // Hill uses only the lower bound
};

/// Tail exponent over the scaling range [x_lo, x_hi].
/// CcdfOls: least squares on (log x, log CCDF) restricted to the range.
/// Hill: maximum likelihood on exceedances over x_lo (x_hi ignored, flagged
/// in the result). Needs >= 50 sample points in range.
TailFit fit_tail(std::span<const double> sample, double x_lo, double x_hi,
                 TailMethod method);

/// Scaling-range auto-selection: picks the candidate x_lo minimizing the
/// Kolmogorov-Smirnov distance between the empirical exceedance CCDF and the
/// Hill-fitted Pareto. Returns (x_lo, max of sample).
std::pair<double, double> select_tail_range(std::span<const double> sample,
                                            int n_candidates = 50,
                                            std::size_t min_tail = 50);

struct RelationTest {
  double alpha_omega{};
  double alpha_r{};
  double ratio{};      // alpha_omega / alpha_r
  double alpha{};      // impact power-law exponent
  double deviation{};  // D = (ratio - alpha) / alpha
};

RelationTest relation_test(const TailFit& size_fit, const TailFit& return_fit,
                           const impact::PowerLawFit& impact_fit);

/// Convenience path for planted (omega, r) pairs: fits the size tail, the
/// return tail (zeros excluded) and the binned impact power law, then
/// assembles the relation test.
RelationTest relation_test(std::span<const impact::Pair> pairs,
                           double size_lo, double size_hi, double ret_lo,
                           double ret_hi, int n_bins, TailMethod method);

}  // namespace impactlab::tails
