#include "impactlab/order_flow.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace impactlab::flow {

namespace {

// Decision dimensions, one RNG stream each.
enum Stream : std::uint64_t {
  kKind = 0,
  kCancelPick = 1,
  kSide = 2,
  kSize = 3,
  kMarketable = 4,
  kOffset = 5,
  kPlantSize = 10,
  kPlantNoise = 11,
};

struct LiveSet {
  std::vector<OrderId> ids;
  std::unordered_map<OrderId, std::size_t> pos;

  void add(OrderId id) {
    pos[id] = ids.size();
    ids.push_back(id);
  }
  void remove(OrderId id) {
    auto it = pos.find(id);
    if (it == pos.end()) return;
    const std::size_t i = it->second;
    ids[i] = ids.back();
    pos[ids[i]] = i;
    ids.pop_back();
    pos.erase(it);
  }
  bool empty() const { return ids.empty(); }
  std::size_t size() const { return ids.size(); }
};

Qty round_up_lot(Qty size) { return ((size + 99) / 100) * 100; }

Ticks geometric_offset(double u, double scale) {
  return static_cast<Ticks>(std::floor(-scale * std::log(u)));
}

}  // namespace

void generate(const FlowConfig& config, const EventSink& sink) {
  CounterRng rng(config.seed);
  lob::Book book;
  LiveSet live;

  Seq seq = config.first_seq;
  OrderId next_id = config.first_order_id;

  for (std::uint64_t i = 0; i < config.n_events; ++i) {
    lob::OrderEvent ev;
    ev.seq = seq;
    ev.ts_ns = static_cast<std::int64_t>(seq) * config.ts_step_ns;

    const bool do_cancel =
        !live.empty() && rng.u01(kKind, i) < config.p_cancel;
    if (do_cancel) {
      const auto pick = static_cast<std::size_t>(rng.u01(kCancelPick, i) *
                                                 static_cast<double>(live.size()));
      ev.kind = lob::EventKind::Cancel;
      ev.order_id = live.ids[std::min(pick, live.size() - 1)];
    } else {
      ev.kind = lob::EventKind::Submit;
      ev.order_id = next_id++;
      ev.side = rng.u01(kSide, i) < config.p_buy ? lob::Side::Buy
                                                 : lob::Side::Sell;
      Qty size = static_cast<Qty>(std::ceil(pareto_icdf(
          rng.u01(kSize, i), config.size_tail,
          static_cast<double>(config.size_min))));
      if (ev.side == lob::Side::Buy && config.lot_rule == LotRule::BuyLots100)
        size = round_up_lot(size);
      ev.size = std::max<Qty>(size, 1);

      const auto bid = book.best_bid();
      const auto ask = book.best_ask();
      const bool opposite_nonempty =
          ev.side == lob::Side::Buy ? ask.has_value() : bid.has_value();
      const bool marketable =
          opposite_nonempty && rng.u01(kMarketable, i) < config.marketable_fraction;
      const double u_off = rng.u01(kOffset, i);

      Ticks price;
      if (marketable) {
        const Ticks extra = geometric_offset(u_off, config.placement_width / 2.0);
        price = ev.side == lob::Side::Buy ? *ask + extra : *bid - extra;
      } else if (ev.side == lob::Side::Buy) {
        const Ticks anchor =
            bid ? *bid + 1 : (ask ? *ask - 1 : config.initial_mid);
        price = anchor - geometric_offset(u_off, config.placement_width);
        if (ask) price = std::min(price, *ask - 1);
      } else {
        const Ticks anchor =
            ask ? *ask - 1 : (bid ? *bid + 1 : config.initial_mid);
        price = anchor + geometric_offset(u_off, config.placement_width);
        if (bid) price = std::max(price, *bid + 1);
      }
      ev.price = std::max<Ticks>(price, 1);
    }

    sink(ev);

    const lob::ApplyResult res = book.apply(ev);
    switch (res.status) {
      case lob::FillStatus::Resting:
      case lob::FillStatus::PartiallyFilled:
        live.add(ev.order_id);
        break;
      case lob::FillStatus::Canceled:
        live.remove(ev.order_id);
        break;
      case lob::FillStatus::Filled:
        break;
    }
    for (const lob::Execution& ex : res.executions)
      if (!book.contains(ex.maker_order_id)) live.remove(ex.maker_order_id);

    ++seq;
  }
}

std::vector<lob::OrderEvent> generate(const FlowConfig& config) {
  std::vector<lob::OrderEvent> out;
  out.reserve(config.n_events);
  generate(config, [&](const lob::OrderEvent& ev) { out.push_back(ev); });
  return out;
}

std::vector<std::pair<double, double>> generate_planted_impact(
    std::size_t n, double alpha, double prefactor, double size_tail,
    std::uint64_t seed, double noise, double omega_min) {
  CounterRng rng(seed);
  std::vector<std::pair<double, double>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double omega =
        pareto_icdf(rng.u01(kPlantSize, i), size_tail, omega_min);
    double r = prefactor * std::pow(omega, alpha);
    if (noise > 0.0) r *= 1.0 + noise * (2.0 * rng.u01(kPlantNoise, i) - 1.0);
    out.emplace_back(omega, r);
  }
  return out;
}

}  // namespace impactlab::flow
