#pragma once

#include <cmath>
#include <limits>
#include <cstddef>
#include <span>

#include "impactlab/types.hpp"

namespace impactlab::stats {

struct OlsFit {
  double slope{};
  double intercept{};
  double slope_stderr{};
  std::size_t n{};
};

/// Ordinary least squares y = intercept + slope * x. Requires n >= 2;
/// slope_stderr is NaN for n < 3.
inline OlsFit ols(std::span<const double> xs, std::span<const double> ys) {
  const std::size_t n = xs.size();
  if (n != ys.size() || n < 2) throw TooFewPoints("ols needs >= 2 points");

  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);

  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx;
    sxx += dx * dx;
    sxy += dx * (ys[i] - my);
  }
  if (sxx == 0.0) throw TooFewPoints("ols with degenerate abscissa");

  OlsFit fit;
  fit.n = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (n < 3) {
    fit.slope_stderr = std::numeric_limits<double>::quiet_NaN();
    return fit;
  }
  double ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ssr += e * e;
  }
  fit.slope_stderr = std::sqrt(ssr / (static_cast<double>(n - 2) * sxx));
  return fit;
}

inline double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Population standard deviation (two-pass).
inline double stddev_pop(std::span<const double> v) {
  const double mu = mean(v);
  double s = 0.0;
  for (double x : v) {
    const double d = x - mu;
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace impactlab::stats
