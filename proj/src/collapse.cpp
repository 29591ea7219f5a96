#include "impactlab/collapse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <thread>

namespace impactlab::collapse {

namespace {

/// Shared evaluation core. The grid search and the public epsilon() both go
/// through this class so they produce bit-identical values for the same
/// (delta, gamma).
class Evaluator {
 public:
  Evaluator(std::span<const Point> points, int n_bins, BinMode mode)
      : points_(points), n_bins_(n_bins), mode_(mode) {
    if (n_bins < 2) throw Error("epsilon needs n_bins >= 2");
    if (points.size() < static_cast<std::size_t>(n_bins))
      throw TooFewPoints("epsilon: fewer points than bins");
    std::uint32_t max_stock = 0;
    for (const Point& p : points) max_stock = std::max(max_stock, p.stock);
    caps_.assign(max_stock + 1, 0.0);
    for (const Point& p : points) {
      if (caps_[p.stock] == 0.0)
        caps_[p.stock] = p.cap;
      else if (caps_[p.stock] != p.cap)
        throw Error("inconsistent capitalization for stock index " +
                    std::to_string(p.stock));
      if (!(p.cap > 0.0)) throw Error("capitalization must be positive");
    }
    const std::size_t n = points.size();
    keys_.resize(n);
    order_.resize(n);
    keys_sorted_.resize(n);
    y_sorted_.resize(n);
    stock_sorted_.resize(n);
    ys_.resize(n);
    bin_begin_.resize(static_cast<std::size_t>(n_bins) + 1);
    x_term_.resize(n_bins);
    cpow_.resize(caps_.size());
  }

  void set_delta(double delta) {
    for (std::size_t s = 0; s < caps_.size(); ++s)
      cpow_[s] = caps_[s] > 0.0 ? std::pow(caps_[s], -delta) : 0.0;
    const std::size_t n = points_.size();
    for (std::size_t i = 0; i < n; ++i)
      keys_[i] = points_[i].x * cpow_[points_[i].stock];
    for (std::size_t i = 0; i < n; ++i)
      order_[i] = static_cast<std::uint32_t>(i);
    std::sort(order_.begin(), order_.end(),
              [&](std::uint32_t a, std::uint32_t b) {
                if (keys_[a] != keys_[b]) return keys_[a] < keys_[b];
                return a < b;  // stable on ties
              });
    for (std::size_t j = 0; j < n; ++j) {
      const std::uint32_t i = order_[j];
      keys_sorted_[j] = keys_[i];
      y_sorted_[j] = points_[i].y;
      stock_sorted_[j] = points_[i].stock;
    }
    const auto k = static_cast<std::size_t>(n_bins_);
    if (mode_ == BinMode::EqualCount) {
      // sizes floor(n/k) or ceil(n/k), extras leading
      const std::size_t base = n / k;
      const std::size_t extra = n % k;
      std::size_t at = 0;
      for (std::size_t b = 0; b < k; ++b) {
        bin_begin_[b] = at;
        at += base + (b < extra ? 1 : 0);
      }
      bin_begin_[k] = at;
    } else {
      // equal key width over [min, max]; empty bins end up excluded
      const double lo = keys_sorted_.front();
      const double width = (keys_sorted_.back() - lo) / static_cast<double>(k);
      std::size_t at = 0;
      for (std::size_t b = 0; b < k; ++b) {
        bin_begin_[b] = at;
        const double edge = lo + width * static_cast<double>(b + 1);
        while (at < n && (b + 1 == k || keys_sorted_[at] <= edge)) ++at;
      }
      bin_begin_[k] = n;
    }

    for (int b = 0; b < n_bins_; ++b)
      x_term_[b] = cv_squared(keys_sorted_, bin_begin_[b], bin_begin_[b + 1]);
  }

  /// Within-bin epsilon averaged over usable bins; nullopt when every bin
  /// is excluded.
  std::optional<EpsilonResult> eval_gamma(double gamma) {
    for (std::size_t s = 0; s < caps_.size(); ++s)
      cpow_[s] = caps_[s] > 0.0 ? std::pow(caps_[s], gamma) : 0.0;
    const std::size_t n = points_.size();
    for (std::size_t j = 0; j < n; ++j)
      ys_[j] = y_sorted_[j] * cpow_[stock_sorted_[j]];

    double sum = 0.0;
    int used = 0, excluded = 0;
    for (int b = 0; b < n_bins_; ++b) {
      const double y_term = cv_squared(ys_, bin_begin_[b], bin_begin_[b + 1]);
      if (std::isnan(y_term) || std::isnan(x_term_[b])) {
        ++excluded;
        continue;
      }
      sum += y_term + x_term_[b];
      ++used;
    }
    if (used == 0) return std::nullopt;
    return EpsilonResult{sum / static_cast<double>(used), used, excluded};
  }

 private:
  // (sigma/mu)^2 with population sigma; NaN when mu == 0.
  static double cv_squared(const std::vector<double>& v, std::size_t begin,
                           std::size_t end) {
    const auto len = static_cast<double>(end - begin);
    double mu = 0.0;
    for (std::size_t i = begin; i < end; ++i) mu += v[i];
    mu /= len;
    if (mu == 0.0) return std::numeric_limits<double>::quiet_NaN();
    double ss = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const double d = v[i] - mu;
      ss += d * d;
    }
    return ss / (len * mu * mu);
  }

  std::span<const Point> points_;
  int n_bins_;
  BinMode mode_;
  std::vector<double> caps_;
  std::vector<double> cpow_;
  std::vector<double> keys_;
  std::vector<std::uint32_t> order_;
  std::vector<double> keys_sorted_;
  std::vector<double> y_sorted_;
  std::vector<std::uint32_t> stock_sorted_;
  std::vector<double> ys_;
  std::vector<std::size_t> bin_begin_;
  std::vector<double> x_term_;
};

struct Candidate {
  double eps = std::numeric_limits<double>::infinity();
  double norm2 = std::numeric_limits<double>::infinity();
  double delta = 0.0;
  double gamma = 0.0;
  bool valid = false;
};

// Strict total order: smallest eps, then smallest delta^2 + gamma^2, then
// lexicographic. Makes the argmin independent of evaluation order.
bool better(const Candidate& a, const Candidate& b) {
  if (!b.valid) return a.valid;
  if (!a.valid) return false;
  if (a.eps != b.eps) return a.eps < b.eps;
  if (a.norm2 != b.norm2) return a.norm2 < b.norm2;
  if (a.delta != b.delta) return a.delta < b.delta;
  return a.gamma < b.gamma;
}

Candidate make_candidate(double delta, double gamma,
                         const std::optional<EpsilonResult>& r) {
  Candidate c;
  if (!r) return c;
  c.eps = r->epsilon;
  c.delta = delta;
  c.gamma = gamma;
  c.norm2 = delta * delta + gamma * gamma;
  c.valid = true;
  return c;
}

}  // namespace

EpsilonResult epsilon(std::span<const Point> points, double delta,
                      double gamma, int n_bins, BinMode mode) {
  Evaluator ev(points, n_bins, mode);
  ev.set_delta(delta);
  const auto res = ev.eval_gamma(gamma);
  if (!res) throw DegenerateBins("epsilon: every bin excluded");
  return *res;
}

CollapseResult search_exponents(std::span<const Point> points,
                                const GridSpec& spec) {
  const auto lo_mi = static_cast<long>(std::llround(spec.lo * 1000.0));
  const auto hi_mi = static_cast<long>(std::llround(spec.hi * 1000.0));
  const auto cstep = static_cast<long>(std::llround(spec.coarse_step * 1000.0));
  const auto fstep = static_cast<long>(std::llround(spec.fine_step * 1000.0));
  if (cstep <= 0 || fstep <= 0 || lo_mi >= hi_mi)
    throw Error("search_exponents: invalid grid spec");

  std::vector<long> coarse;
  for (long mi = lo_mi; mi <= hi_mi; mi += cstep) coarse.push_back(mi);
  const std::size_t n_delta = coarse.size();
  const std::size_t n_gamma = coarse.size();

  CollapseResult out;
  if (spec.capture_surface) out.surface.resize(n_delta * n_gamma);

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t n_threads = std::min<std::size_t>(hw, n_delta);
  std::vector<Candidate> best_per_thread(n_threads);
  std::vector<std::uint64_t> evals_per_thread(n_threads, 0);

  auto run_rows = [&](std::size_t tid) {
    Evaluator ev(points, spec.n_bins, spec.bin_mode);
    Candidate local;
    for (std::size_t di = tid; di < n_delta; di += n_threads) {
      const double delta = static_cast<double>(coarse[di]) / 1000.0;
      ev.set_delta(delta);
      for (std::size_t gi = 0; gi < n_gamma; ++gi) {
        const double gamma = static_cast<double>(coarse[gi]) / 1000.0;
        const auto res = ev.eval_gamma(gamma);
        ++evals_per_thread[tid];
        if (spec.capture_surface) {
          const double eps_val =
              res ? res->epsilon : std::numeric_limits<double>::quiet_NaN();
          out.surface[di * n_gamma + gi] = {delta, gamma, eps_val};
        }
        const Candidate c = make_candidate(delta, gamma, res);
        if (better(c, local)) local = c;
      }
    }
    best_per_thread[tid] = local;
  };

  if (n_threads == 1) {
    run_rows(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t)
      pool.emplace_back(run_rows, t);
    for (auto& th : pool) th.join();
  }

  Candidate best;
  for (const Candidate& c : best_per_thread)
    if (better(c, best)) best = c;
  std::uint64_t evaluations = 0;
  for (std::uint64_t e : evals_per_thread) evaluations += e;
  if (!best.valid)
    throw DegenerateBins("search_exponents: every grid cell degenerate");

  // Local refinement to the fine step around the coarse optimum.
  {
    Evaluator ev(points, spec.n_bins, spec.bin_mode);
    const auto center_d = static_cast<long>(std::llround(best.delta * 1000.0));
    const auto center_g = static_cast<long>(std::llround(best.gamma * 1000.0));
    const long d_lo = std::max(lo_mi, center_d - cstep);
    const long d_hi = std::min(hi_mi, center_d + cstep);
    const long g_lo = std::max(lo_mi, center_g - cstep);
    const long g_hi = std::min(hi_mi, center_g + cstep);
    for (long dm = d_lo; dm <= d_hi; dm += fstep) {
      const double delta = static_cast<double>(dm) / 1000.0;
      ev.set_delta(delta);
      for (long gm = g_lo; gm <= g_hi; gm += fstep) {
        const double gamma = static_cast<double>(gm) / 1000.0;
        const Candidate c = make_candidate(delta, gamma, ev.eval_gamma(gamma));
        ++evaluations;
        if (better(c, best)) best = c;
      }
    }
  }

  // Baseline at exactly (0,0).
  double eps_00;
  {
    Evaluator ev(points, spec.n_bins, spec.bin_mode);
    ev.set_delta(0.0);
    const auto res = ev.eval_gamma(0.0);
    if (!res) throw DegenerateBins("search_exponents: degenerate baseline");
    eps_00 = res->epsilon;
  }

  out.delta = best.delta;
  out.gamma = best.gamma;
  out.eps_min = best.eps;
  out.eps_00 = eps_00;
  out.r_quality = eps_00 > 0.0 ? 1.0 - best.eps / eps_00 : 0.0;
  out.evaluations = evaluations;
  return out;
}

std::vector<double> lc_normalize(
    std::span<const std::vector<double>> sizes_by_day) {
  if (sizes_by_day.empty()) throw EmptyDay("lc_normalize: no days");
  std::uint64_t total_trades = 0;
  for (const auto& day : sizes_by_day) {
    if (day.empty()) throw EmptyDay("lc_normalize: empty day");
    total_trades += day.size();
  }
  const double mean_daily_trades =
      static_cast<double>(total_trades) /
      static_cast<double>(sizes_by_day.size());

  std::vector<double> out;
  out.reserve(total_trades);
  for (const auto& day : sizes_by_day) {
    double day_volume = 0.0;
    for (double w : day) day_volume += w;
    if (!(day_volume > 0.0)) throw Error("lc_normalize: non-positive volume");
    for (double w : day) out.push_back(w / day_volume * mean_daily_trades);
  }
  return out;
}

NormalizationReport compare_normalizations(const NormalizationInput& input,
                                           const GridSpec& spec) {
  std::vector<Point> lfm_pts, lc_pts, dn_pts;
  for (std::size_t s = 0; s < input.stocks.size(); ++s) {
    const auto& st = input.stocks[s];
    for (std::size_t k = 0; k < st.abs_r.size(); ++k) {
      const auto idx = static_cast<std::uint32_t>(s);
      lfm_pts.push_back({st.abs_r[k], st.omega_norm[k], st.cap, idx});
      lc_pts.push_back({st.abs_r[k], st.lc_x[k], st.cap, idx});
      dn_pts.push_back(
          {st.abs_r[k] / st.mean_abs_r, st.omega_norm[k], st.cap, idx});
    }
  }

  NormalizationReport report;
  report.lfm = search_exponents(lfm_pts, spec);
  report.lc = search_exponents(lc_pts, spec);
  const EpsilonResult dn =
      epsilon(dn_pts, 0.0, 0.0, spec.n_bins, spec.bin_mode);
  report.r_double_norm =
      report.lfm.eps_00 > 0.0 ? 1.0 - dn.epsilon / report.lfm.eps_00 : 0.0;
  return report;
}

}  // namespace impactlab::collapse
