#include "impactlab/order_book.hpp"

namespace impactlab::lob {

std::optional<Ticks> Book::best_bid() const {
  if (bids_.empty()) return std::nullopt;
  return bids_.begin()->first;
}

std::optional<Ticks> Book::best_ask() const {
  if (asks_.empty()) return std::nullopt;
  return asks_.begin()->first;
}

ApplyResult Book::apply(const OrderEvent& ev) {
  ApplyResult res = ev.kind == EventKind::Submit ? submit(ev) : cancel(ev);
  check_not_crossed();
  return res;
}

ApplyResult Book::submit(const OrderEvent& ev) {
  if (ev.size <= 0) throw Error("submit with non-positive size");
  if (ev.price < 1) throw Error("submit with price below one tick");
  if (index_.count(ev.order_id) != 0)
    throw Error("duplicate order id " + std::to_string(ev.order_id));

  submitted_ += ev.size;
  Qty remaining = ev.size;
  ApplyResult res;

  auto sweep = [&](auto& levels, auto marketable) {
    while (remaining > 0 && !levels.empty()) {
      auto level = levels.begin();
      if (!marketable(level->first)) break;
      LevelQueue& queue = level->second;
      while (remaining > 0 && !queue.empty()) {
        Resting& maker = queue.front();
        const Qty take = std::min(remaining, maker.remaining);
        res.executions.push_back(
            {ev.order_id, maker.id, level->first, take});
        maker.remaining -= take;
        remaining -= take;
        executed_ += take;
        resting_ -= take;
        if (maker.remaining == 0) {
          index_.erase(maker.id);
          queue.pop_front();
        }
      }
      if (queue.empty()) levels.erase(level);
    }
  };

  if (ev.side == Side::Buy) {
    sweep(asks_, [&](Ticks px) { return px <= ev.price; });
  } else {
    sweep(bids_, [&](Ticks px) { return px >= ev.price; });
  }

  if (remaining > 0) {
    // Unexecuted remainder rests exactly at the limit price.
    LevelQueue* queue = ev.side == Side::Buy ? &bids_[ev.price] : &asks_[ev.price];
    queue->push_back({ev.order_id, ev.seq, remaining});
    index_.emplace(ev.order_id,
                   Location{ev.side, ev.price, std::prev(queue->end())});
    resting_ += remaining;
    res.status = res.executions.empty() ? FillStatus::Resting
                                        : FillStatus::PartiallyFilled;
  } else {
    res.status = FillStatus::Filled;
  }
  return res;
}

ApplyResult Book::cancel(const OrderEvent& ev) {
  auto it = index_.find(ev.order_id);
  if (it == index_.end()) throw CancelUnknownOrder(ev.order_id);

  const Location& loc = it->second;
  canceled_ += loc.it->remaining;
  resting_ -= loc.it->remaining;
  if (loc.side == Side::Buy) {
    auto level = bids_.find(loc.price);
    level->second.erase(loc.it);
    if (level->second.empty()) bids_.erase(level);
  } else {
    auto level = asks_.find(loc.price);
    level->second.erase(loc.it);
    if (level->second.empty()) asks_.erase(level);
  }
  index_.erase(it);
  return {FillStatus::Canceled, {}};
}

void Book::check_not_crossed() const {
  if (!bids_.empty() && !asks_.empty() &&
      bids_.begin()->first >= asks_.begin()->first) {
    throw CrossedBookCorruption("book crossed: bid " +
                                std::to_string(bids_.begin()->first) +
                                " >= ask " +
                                std::to_string(asks_.begin()->first));
  }
}

Qty Book::resting_volume_recount() const {
  Qty total = 0;
  for (const auto& [price, queue] : bids_)
    for (const Resting& r : queue) total += r.remaining;
  for (const auto& [price, queue] : asks_)
    for (const Resting& r : queue) total += r.remaining;
  return total;
}

void Book::for_each_level(
    const std::function<void(Side, Ticks, const LevelQueue&)>& fn) const {
  for (const auto& [price, queue] : bids_) fn(Side::Buy, price, queue);
  for (const auto& [price, queue] : asks_) fn(Side::Sell, price, queue);
}

IdentityOutcome mid_shift_identity(const Quotes& pre, const OrderEvent& ev,
                                   const Quotes& post, FillStatus status) {
  if (status != FillStatus::Filled && status != FillStatus::PartiallyFilled)
    return IdentityOutcome::NotApplicable;
  const auto pre_mid = pre.mid();
  const auto post_mid = post.mid();
  if (!pre_mid || !post_mid) return IdentityOutcome::NotApplicable;

  const HalfTicks observed = *post_mid - *pre_mid;
  HalfTicks predicted = 0;
  if (ev.side == Side::Buy) {
    predicted = *post.ask - *pre.ask;
    if (status == FillStatus::PartiallyFilled) predicted += ev.price - *pre.bid;
  } else {
    predicted = *post.bid - *pre.bid;
    if (status == FillStatus::PartiallyFilled) predicted += ev.price - *pre.ask;
  }
  return observed == predicted ? IdentityOutcome::Holds
                               : IdentityOutcome::Violated;
}

}  // namespace impactlab::lob
