#pragma once

// Test-only reference implementations and audit harnesses. Everything here
// recomputes expected values through routes independent of the library code
// under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <unordered_map>
#include <vector>

#include "impactlab/collapse.hpp"
#include "impactlab/impact.hpp"
#include "impactlab/order_book.hpp"
#include "impactlab/order_flow.hpp"
#include "impactlab/trades.hpp"

namespace oracles {

using namespace impactlab;

// Welford streaming mean, an independent route to the arithmetic mean.
struct StreamingMean {
  double mean = 0.0;
  std::uint64_t n = 0;
  void add(double x) {
    ++n;
    mean += (x - mean) / static_cast<double>(n);
  }
};

/// Brute-force equal-count binning: re-sorts with a different comparator
/// path and accumulates in long double.
inline std::vector<impact::Bin> binning_oracle(
    std::span<const impact::Pair> pairs, int n_bins) {
  std::vector<std::pair<impact::Pair, std::size_t>> tagged;
  for (std::size_t i = 0; i < pairs.size(); ++i) tagged.push_back({pairs[i], i});
  std::sort(tagged.begin(), tagged.end(), [](const auto& a, const auto& b) {
    if (a.first.first != b.first.first) return a.first.first < b.first.first;
    return a.second < b.second;  // input order on ties
  });
  const std::size_t n = tagged.size();
  const auto k = static_cast<std::size_t>(n_bins);
  std::vector<impact::Bin> bins;
  std::size_t at = 0;
  for (std::size_t b = 0; b < k; ++b) {
    const std::size_t len = n / k + (b < n % k ? 1 : 0);
    long double sw = 0.0L, sr = 0.0L;
    for (std::size_t i = at; i < at + len; ++i) {
      sw += tagged[i].first.first;
      sr += tagged[i].first.second;
    }
    bins.push_back({static_cast<double>(sw / static_cast<long double>(len)),
                    static_cast<double>(sr / static_cast<long double>(len)),
                    len});
    at += len;
  }
  return bins;
}

// ---------------------------------------------------------------------------
// Audited replay: feeds a generated stream through a fresh book while an
// independent per-order ledger checks conservation, priority, the mid-shift
// identities, and the trade sign/aggressiveness invariants after every event.
// ---------------------------------------------------------------------------

struct ReplayAudit {
  std::uint64_t events = 0;
  std::uint64_t marketable = 0;
  std::uint64_t trades = 0;

  std::uint64_t identity_holds = 0;
  std::uint64_t identity_violations = 0;
  std::uint64_t identity_not_applicable = 0;

  std::uint64_t conservation_violations = 0;
  std::uint64_t priority_violations = 0;
  std::uint64_t structural_violations = 0;
  std::uint64_t sign_violations = 0;
  std::uint64_t aggressiveness_violations = 0;

  // per-type sums of |r| and counts, indexed by trades::TradeType
  std::array<double, 4> abs_r_sum{};
  std::array<std::uint64_t, 4> type_count{};
  std::array<std::uint64_t, 4> zero_count{};

  bool clean() const {
    return identity_violations == 0 && conservation_violations == 0 &&
           priority_violations == 0 && structural_violations == 0 &&
           sign_violations == 0 && aggressiveness_violations == 0;
  }
};

inline ReplayAudit audited_replay(const flow::FlowConfig& config,
                                  std::uint64_t structural_every = 10000) {
  lob::Book book;
  ReplayAudit audit;

  struct Ledger {
    Qty remaining = 0;
    Seq seq = 0;
  };
  std::unordered_map<OrderId, Ledger> ledger;
  Qty submitted = 0, executed = 0, canceled = 0, resting = 0;

  auto structural_check = [&]() {
    if (book.resting_volume_recount() != book.resting_volume()) {
      ++audit.structural_violations;
      return;
    }
    // levels sorted best-first and FIFO seq order inside each level
    Ticks last_bid = std::numeric_limits<Ticks>::max();
    Ticks last_ask = std::numeric_limits<Ticks>::min();
    bool ok = true;
    book.for_each_level([&](lob::Side side, Ticks price,
                            const lob::Book::LevelQueue& queue) {
      if (side == lob::Side::Buy) {
        if (price >= last_bid && last_bid != std::numeric_limits<Ticks>::max())
          ok = false;
        last_bid = price;
      } else {
        if (price <= last_ask && last_ask != std::numeric_limits<Ticks>::min())
          ok = false;
        last_ask = price;
      }
      Seq prev_seq = 0;
      for (const auto& r : queue) {
        if (r.seq <= prev_seq && prev_seq != 0) ok = false;
        prev_seq = r.seq;
        if (r.remaining <= 0) ok = false;
      }
    });
    const auto bid = book.best_bid();
    const auto ask = book.best_ask();
    if (bid && ask && *bid >= *ask) ok = false;
    if (!ok) ++audit.structural_violations;
  };

  flow::generate(config, [&](const lob::OrderEvent& ev) {
    ++audit.events;
    const lob::Quotes pre = book.quotes();
    const lob::ApplyResult res = book.apply(ev);

    // Independent ledger update from the event + execution stream.
    if (ev.kind == lob::EventKind::Submit) {
      submitted += ev.size;
      Qty taker_fill = 0;
      Ticks last_price = 0;
      Seq last_seq_at_price = 0;
      for (const lob::Execution& ex : res.executions) {
        taker_fill += ex.size;
        executed += ex.size;
        auto it = ledger.find(ex.maker_order_id);
        if (it == ledger.end() || it->second.remaining < ex.size) {
          ++audit.conservation_violations;
        } else {
          // price-time priority: maker prices move away from the touch,
          // maker seqs increase within a level
          const bool price_ok =
              last_price == 0 ||
              (ev.side == lob::Side::Buy ? ex.price >= last_price
                                         : ex.price <= last_price);
          if (!price_ok) ++audit.priority_violations;
          if (ex.price == last_price && it->second.seq <= last_seq_at_price)
            ++audit.priority_violations;
          if (ex.price != last_price) last_seq_at_price = 0;
          last_price = ex.price;
          last_seq_at_price = it->second.seq;
          it->second.remaining -= ex.size;
          resting -= ex.size;
          if (it->second.remaining == 0) ledger.erase(it);
        }
      }
      const Qty rest = ev.size - taker_fill;
      if (res.status == lob::FillStatus::Resting ||
          res.status == lob::FillStatus::PartiallyFilled) {
        if (rest <= 0) ++audit.conservation_violations;
        ledger[ev.order_id] = {rest, ev.seq};
        resting += rest;
      } else if (rest != 0) {
        ++audit.conservation_violations;
      }
    } else {
      auto it = ledger.find(ev.order_id);
      if (it == ledger.end()) {
        ++audit.conservation_violations;
      } else {
        canceled += it->second.remaining;
        resting -= it->second.remaining;
        ledger.erase(it);
      }
    }

    if (submitted != book.submitted_volume() ||
        executed != book.executed_volume() ||
        canceled != book.canceled_volume() ||
        resting != book.resting_volume() ||
        submitted != 2 * executed + canceled + resting)
      ++audit.conservation_violations;

    if (res.status == lob::FillStatus::Filled ||
        res.status == lob::FillStatus::PartiallyFilled) {
      ++audit.marketable;
      switch (lob::mid_shift_identity(pre, ev, book.quotes(), res.status)) {
        case lob::IdentityOutcome::Holds:
          ++audit.identity_holds;
          break;
        case lob::IdentityOutcome::Violated:
          ++audit.identity_violations;
          break;
        case lob::IdentityOutcome::NotApplicable:
          ++audit.identity_not_applicable;
          break;
      }
      const auto trade = trades::build_trade(ev, res.executions, res.status,
                                             pre.mid(), book.mid());
      if (trade) {
        ++audit.trades;
        const bool buy = trade->direction == trades::Direction::BuyerInit;
        if ((buy && trade->r < 0.0) || (!buy && trade->r > 0.0))
          ++audit.sign_violations;
        if (trade->aggressiveness == trades::Aggressiveness::PartiallyFilled &&
            std::llabs(trade->post_mid - trade->pre_mid) < 1)
          ++audit.aggressiveness_violations;
        const auto i = static_cast<std::size_t>(trade->type());
        audit.abs_r_sum[i] += std::abs(trade->r);
        audit.type_count[i] += 1;
        if (trade->pre_mid == trade->post_mid) audit.zero_count[i] += 1;
      }
    }

    if (structural_every != 0 && audit.events % structural_every == 0)
      structural_check();
  });
  structural_check();
  return audit;
}

// ---------------------------------------------------------------------------
// Curve-gap harness: max vertical distance (in log10 r) between binned
// curves, measured on a common grid by piecewise-linear interpolation in
// log-log space over the shared x-range.
// ---------------------------------------------------------------------------

inline double interp_loglog(const std::vector<impact::Bin>& bins, double x) {
  const double lx = std::log10(x);
  for (std::size_t i = 1; i < bins.size(); ++i) {
    const double x0 = std::log10(bins[i - 1].mean_omega);
    const double x1 = std::log10(bins[i].mean_omega);
    if (lx < x0 || lx > x1) continue;
    const double y0 = std::log10(bins[i - 1].mean_r);
    const double y1 = std::log10(bins[i].mean_r);
    const double t = x1 == x0 ? 0.0 : (lx - x0) / (x1 - x0);
    return y0 + t * (y1 - y0);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

inline double max_vertical_gap(
    const std::vector<std::vector<impact::Bin>>& curves, int n_queries = 25) {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (const auto& bins : curves) {
    lo = std::max(lo, bins.front().mean_omega);
    hi = std::min(hi, bins.back().mean_omega);
  }
  if (!(hi > lo)) return std::numeric_limits<double>::quiet_NaN();
  double gap = 0.0;
  for (int q = 0; q < n_queries; ++q) {
    const double x =
        lo * std::pow(hi / lo, (q + 0.5) / static_cast<double>(n_queries));
    double ymin = std::numeric_limits<double>::infinity();
    double ymax = -std::numeric_limits<double>::infinity();
    for (const auto& bins : curves) {
      const double y = interp_loglog(bins, x);
      if (std::isnan(y)) continue;
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
    if (ymax > ymin) gap = std::max(gap, ymax - ymin);
  }
  return gap;
}

// ---------------------------------------------------------------------------
// Planted scaling-collapse data: y = C^(-gamma0) * f(x / C^delta0) with a
// concave crossover shape f, bounded multiplicative noise, capitalizations
// log-spaced over the reference panel span [107.1, 1406.5].
// ---------------------------------------------------------------------------

inline double crossover_shape(double u) {
  return std::pow(u, 0.66) / std::pow(1.0 + u, 0.33);
}

inline std::vector<collapse::Point> planted_collapse(
    int n_stocks, int per_stock, double delta0, double gamma0, double noise,
    std::uint64_t seed, bool c_dependent = true) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<collapse::Point> out;
  out.reserve(static_cast<std::size_t>(n_stocks) * per_stock);
  for (int s = 0; s < n_stocks; ++s) {
    const double frac =
        n_stocks > 1 ? static_cast<double>(s) / (n_stocks - 1) : 0.0;
    const double cap = 107.1 * std::pow(1406.5 / 107.1, frac);
    for (int i = 0; i < per_stock; ++i) {
      // sample the scaling variable u = x/C^delta0 on a common range, so
      // the planted law holds with x spanning stock-dependent windows
      const double u = 0.1 * std::exp(unif(gen) * std::log(300.0));
      double x, y;
      if (c_dependent) {
        x = u * std::pow(cap, delta0);
        y = std::pow(cap, -gamma0) * crossover_shape(u);
      } else {
        x = u;
        y = crossover_shape(u);
      }
      y *= 1.0 + noise * (2.0 * unif(gen) - 1.0);
      out.push_back({y, x, cap, static_cast<std::uint32_t>(s)});
    }
  }
  return out;
}

/// Pareto sampling through std::mt19937_64, independent of the library's
/// counter-based source.
inline std::vector<double> mt_pareto_sample(std::size_t n, double alpha,
                                            double x_min, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = u(gen);
    while (v <= 0.0) v = u(gen);
    out.push_back(x_min * std::pow(v, -1.0 / alpha));
  }
  return out;
}

}  // namespace oracles
