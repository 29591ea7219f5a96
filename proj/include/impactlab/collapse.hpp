#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "impactlab/types.hpp"

namespace impactlab::collapse {

/// One observation for the capitalization-scaling analysis: unnormalized
/// return y, normalized trade size x, capitalization C of the stock.
struct Point {
  double y{};
  double x{};
  double cap{};
  std::uint32_t stock{};
};

struct EpsilonResult {
  double epsilon{};
  int bins_used{};
  int bins_excluded{};  // empty bins, or bins whose x or y mean was zero
};

/// Partitioning of the sorted x/C^delta axis: equal-count bins (the default,
/// matching the impact-curve binning) or equal-width bins over the key range.
enum class BinMode : std::uint8_t { EqualCount, EqualWidth };

/// Mean over bins of the two-dimensional within-bin variance
///   eps_b = [sigma(y C^gamma)/mu(y C^gamma)]^2 + [sigma(x/C^delta)/mu(x/C^delta)]^2
/// with the bin axis sorted by x/C^delta. Population sigma, stable ordering
/// on ties. Throws DegenerateBins when every bin is excluded.
EpsilonResult epsilon(std::span<const Point> points, double delta,
                      double gamma, int n_bins,
                      BinMode mode = BinMode::EqualCount);

struct GridSpec {
  double lo = -1.0;
  double hi = 1.0;
  double coarse_step = 0.01;
  double fine_step = 0.001;
  int n_bins = 50;
  BinMode bin_mode = BinMode::EqualCount;
  bool capture_surface = false;  // record the coarse grid for plotting
};

struct SurfacePoint {
  double delta{};
  double gamma{};
  double epsilon{};
};

struct CollapseResult {
  double delta{};
  double gamma{};
  double r_quality{};  // R = 1 - eps_min/eps_00
  double eps_min{};
  double eps_00{};
  std::uint64_t evaluations{};
  std::vector<SurfacePoint> surface;  // coarse grid when requested
};

/// Dense coarse grid over (delta, gamma) followed by local refinement to
/// the fine step. Deterministic regardless of evaluation order: ties are
/// broken by smallest delta^2 + gamma^2, then lexicographically.
CollapseResult search_exponents(std::span<const Point> points,
                                const GridSpec& spec);

/// Daily-normalized trade sizes. With omega_ij the size of trade j on day i,
/// T_i the trade count of day i and N the number of days:
///   x_ij = [omega_ij / sum_m omega_im] * [sum_d T_d / N]
/// i.e. day-share of volume rescaled by the mean daily trade count. Output
/// is flattened in day order.
std::vector<double> lc_normalize(
    std::span<const std::vector<double>> sizes_by_day);

struct NormalizationInput {
  struct Stock {
    std::string code;
    double cap{};
    std::vector<double> abs_r;       // |r| per trade
    std::vector<double> omega_norm;  // omega / <omega>
    std::vector<double> lc_x;        // LC-normalized sizes, same order
    double mean_abs_r{};
  };
  std::vector<Stock> stocks;
};

struct NormalizationReport {
  CollapseResult lfm;    // capitalization search on (omega/<omega>, r)
  CollapseResult lc;     // capitalization search on (lc_x, r)
  double r_double_norm{};  // 1 - eps(r/<r> vs omega/<omega>) / eps_00(lfm)
};

/// Scores the three normalization pipelines against the common unscaled
/// baseline.
NormalizationReport compare_normalizations(const NormalizationInput& input,
                                           const GridSpec& spec);

}  // namespace impactlab::collapse
