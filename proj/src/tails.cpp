#include "impactlab/tails.hpp"

#include <algorithm>
#include <cmath>

#include "impactlab/stats.hpp"

namespace impactlab::tails {

std::vector<std::pair<double, double>> ccdf(std::span<const double> sample) {
  if (sample.empty()) throw Error("ccdf of empty sample");
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  if (!(sorted.front() > 0.0)) throw Error("ccdf needs positive values");

  const auto n = static_cast<double>(sorted.size());
  std::vector<std::pair<double, double>> out;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    out.emplace_back(sorted[i],
                     static_cast<double>(sorted.size() - j) / n);
    i = j;
  }
  return out;
}

TailFit fit_tail(std::span<const double> sample, double x_lo, double x_hi,
                 TailMethod method) {
  if (!(x_lo > 0.0) || !(x_hi > x_lo))
    throw Error("fit_tail: invalid scaling range");

  std::size_t n_tail = 0;
  for (double x : sample)
    if (x >= x_lo && x <= x_hi) ++n_tail;
  if (n_tail < 50)
    throw TooFewTailPoints("fit_tail: " + std::to_string(n_tail) +
                           " points in range, need >= 50");

  TailFit fit;
  fit.x_lo = x_lo;
  fit.x_hi = x_hi;
  fit.n_tail = n_tail;
  fit.method = method;

  if (method == TailMethod::Hill) {
    // MLE on exceedances over x_lo; the upper bound is ignored.
    double sum_log = 0.0;
    std::size_t k = 0;
    for (double x : sample) {
      if (x <= x_lo) continue;
      sum_log += std::log(x / x_lo);
      ++k;
    }
    if (k < 50) throw TooFewTailPoints("fit_tail: too few exceedances");
    fit.exponent = static_cast<double>(k) / sum_log;
    fit.exponent_stderr = fit.exponent / std::sqrt(static_cast<double>(k));
    fit.upper_bound_ignored = true;
    return fit;
  }

  const auto curve = ccdf(sample);
  std::vector<double> lx, lp;
  for (const auto& [x, p] : curve) {
    if (x < x_lo || x > x_hi) continue;
    if (!(p > 0.0)) continue;
    lx.push_back(std::log(x));
    lp.push_back(std::log(p));
  }
  if (lx.size() < 2)
    throw TooFewTailPoints("fit_tail: too few distinct CCDF points in range");
  const stats::OlsFit ols = stats::ols(lx, lp);
  fit.exponent = -ols.slope;
  fit.exponent_stderr = ols.slope_stderr;
  return fit;
}

std::pair<double, double> select_tail_range(std::span<const double> sample,
                                            int n_candidates,
                                            std::size_t min_tail) {
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.size() < min_tail + 1 || !(sorted.front() > 0.0))
    throw TooFewTailPoints("select_tail_range: sample too small");
  const double x_hi = sorted.back();

  // Candidate thresholds at quantiles below the point where fewer than
  // min_tail exceedances would remain.
  const std::size_t max_start = sorted.size() - min_tail;
  double best_lo = sorted.front();
  double best_ks = std::numeric_limits<double>::infinity();
  for (int c = 0; c < n_candidates; ++c) {
    const std::size_t idx =
        static_cast<std::size_t>(static_cast<double>(max_start) *
                                 static_cast<double>(c) /
                                 static_cast<double>(n_candidates));
    const double lo = sorted[idx];
    if (!(lo > 0.0)) continue;
    // Hill fit over exceedances.
    double sum_log = 0.0;
    std::size_t k = 0;
    for (std::size_t i = idx; i < sorted.size(); ++i) {
      if (sorted[i] <= lo) continue;
      sum_log += std::log(sorted[i] / lo);
      ++k;
    }
    if (k < min_tail) continue;
    const double alpha = static_cast<double>(k) / sum_log;
    // KS distance between empirical exceedance CCDF and the fitted Pareto.
    double ks = 0.0;
    std::size_t seen = 0;
    for (std::size_t i = sorted.size() - k; i < sorted.size(); ++i) {
      ++seen;
      const double emp =
          1.0 - static_cast<double>(seen) / static_cast<double>(k);
      const double model = std::pow(sorted[i] / lo, -alpha);
      ks = std::max(ks, std::abs(emp - model));
    }
    if (ks < best_ks) {
      best_ks = ks;
      best_lo = lo;
    }
  }
  return {best_lo, x_hi};
}

RelationTest relation_test(const TailFit& size_fit, const TailFit& return_fit,
                           const impact::PowerLawFit& impact_fit) {
  RelationTest t;
  t.alpha_omega = size_fit.exponent;
  t.alpha_r = return_fit.exponent;
  t.ratio = t.alpha_omega / t.alpha_r;
  t.alpha = impact_fit.exponent;
  t.deviation = (t.ratio - t.alpha) / t.alpha;
  return t;
}

RelationTest relation_test(std::span<const impact::Pair> pairs, double size_lo,
                           double size_hi, double ret_lo, double ret_hi,
                           int n_bins, TailMethod method) {
  std::vector<double> sizes, returns;
  sizes.reserve(pairs.size());
  for (const auto& [omega, r] : pairs) {
    sizes.push_back(omega);
    if (r != 0.0) returns.push_back(std::abs(r));
  }
  const TailFit size_fit = fit_tail(sizes, size_lo, size_hi, method);
  const TailFit return_fit = fit_tail(returns, ret_lo, ret_hi, method);
  const impact::PowerLawFit impact_fit =
      impact::fit_power_law(impact::bin_equal_count(pairs, n_bins));
  return relation_test(size_fit, return_fit, impact_fit);
}

}  // namespace impactlab::tails
