#include "impactlab/trades.hpp"

namespace impactlab::trades {

std::optional<Trade> build_trade(const lob::OrderEvent& ev,
                                 std::span<const lob::Execution> executions,
                                 lob::FillStatus status,
                                 std::optional<HalfTicks> pre_mid,
                                 std::optional<HalfTicks> post_mid) {
  if (status != lob::FillStatus::Filled &&
      status != lob::FillStatus::PartiallyFilled)
    return std::nullopt;
  if (!pre_mid || !post_mid) return std::nullopt;

  Trade t;
  t.seq = ev.seq;
  t.ts_ns = ev.ts_ns;
  t.omega = 0;
  for (const auto& ex : executions) t.omega += ex.size;
  t.pre_mid = *pre_mid;
  t.post_mid = *post_mid;
  t.r = static_cast<double>(*post_mid - *pre_mid) /
        static_cast<double>(*pre_mid);
  t.direction = ev.side == lob::Side::Buy ? Direction::BuyerInit
                                          : Direction::SellerInit;
  t.aggressiveness = status == lob::FillStatus::Filled
                         ? Aggressiveness::Filled
                         : Aggressiveness::PartiallyFilled;
  return t;
}

ClassifyResult classify_counts(std::span<const Trade> trades) {
  std::array<double, 4> sum_r{};
  std::array<double, 4> sum_omega{};
  ClassifyResult res;
  for (const Trade& t : trades) {
    const auto i = static_cast<std::size_t>(t.type());
    res.by_type[i].count += 1;
    sum_r[i] += t.r;
    sum_omega[i] += static_cast<double>(t.omega);
  }
  for (std::size_t i = 0; i < 4; ++i) {
    if (res.by_type[i].count == 0) continue;
    const auto n = static_cast<double>(res.by_type[i].count);
    res.by_type[i].mean_r = sum_r[i] / n;
    res.by_type[i].mean_omega = sum_omega[i] / n;
  }
  return res;
}

std::optional<double> zero_shift_fraction(std::span<const Trade> trades,
                                          TradeType type) {
  std::uint64_t n = 0;
  std::uint64_t zeros = 0;
  for (const Trade& t : trades) {
    if (t.type() != type) continue;
    ++n;
    if (t.pre_mid == t.post_mid) ++zeros;
  }
  if (n == 0) return std::nullopt;
  return static_cast<double>(zeros) / static_cast<double>(n);
}

std::vector<Trade> reconstruct_trades(std::span<const lob::OrderEvent> events,
                                      ReplayCounters* counters) {
  lob::Book book;
  std::vector<Trade> out;
  ReplayCounters local;
  ReplayCounters& c = counters ? *counters : local;

  for (const lob::OrderEvent& ev : events) {
    ++c.events;
    if (ev.kind == lob::EventKind::Submit)
      ++c.submits;
    else
      ++c.cancels;

    const lob::Quotes pre = book.quotes();
    const lob::ApplyResult res = book.apply(ev);
    if (res.status != lob::FillStatus::Filled &&
        res.status != lob::FillStatus::PartiallyFilled)
      continue;
    ++c.marketable;

    auto trade = build_trade(ev, res.executions, res.status, pre.mid(),
                             book.mid());
    if (!trade) {
      ++c.skipped_one_sided;
      continue;
    }
    ++c.trades_built;
    out.push_back(*trade);
  }
  return out;
}

}  // namespace impactlab::trades
