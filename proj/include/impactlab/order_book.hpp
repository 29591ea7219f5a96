#pragma once

#include <cstdint>
#include <functional>
#include <list>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "impactlab/types.hpp"

namespace impactlab::lob {

enum class Side : std::uint8_t { Buy, Sell };
enum class EventKind : std::uint8_t { Submit, Cancel };
enum class FillStatus : std::uint8_t { Filled, PartiallyFilled, Resting, Canceled };

struct OrderEvent {
  Seq seq{};
  std::int64_t ts_ns{};
  EventKind kind{EventKind::Submit};
  OrderId order_id{};
  Side side{Side::Buy};
  Ticks price{};  // Submit only
  Qty size{};     // Submit only
};

struct Execution {
  OrderId taker_order_id{};
  OrderId maker_order_id{};
  Ticks price{};
  Qty size{};
};

struct ApplyResult {
  FillStatus status{FillStatus::Resting};
  std::vector<Execution> executions;
};

/// Best bid/ask snapshot. Mid-price is returned in half-ticks:
/// (bid + ask)/2 RMB-ticks == bid + ask half-ticks, exact in integers.
struct Quotes {
  std::optional<Ticks> bid;
  std::optional<Ticks> ask;

  std::optional<HalfTicks> mid() const {
    if (!bid || !ask) return std::nullopt;
    return *bid + *ask;
  }
};

/// Price-time-priority continuous double auction book for one instrument.
/// Pure state machine: identical event sequences produce identical
/// executions and states. Orders crossing an empty opposite side rest at
/// their limit (limit orders only, no market orders).
class Book {
 public:
  struct Resting {
    OrderId id;
    Seq seq;
    Qty remaining;
  };
  using LevelQueue = std::list<Resting>;

  ApplyResult apply(const OrderEvent& ev);

  std::optional<Ticks> best_bid() const;
  std::optional<Ticks> best_ask() const;
  Quotes quotes() const { return {best_bid(), best_ask()}; }
  std::optional<HalfTicks> mid() const { return quotes().mid(); }

  bool contains(OrderId id) const { return index_.count(id) != 0; }
  std::size_t live_orders() const { return index_.size(); }

  // Aggregate volume ledger, maintained incrementally.
  Qty submitted_volume() const { return submitted_; }
  Qty executed_volume() const { return executed_; }  // sum of execution sizes
  Qty canceled_volume() const { return canceled_; }
  Qty resting_volume() const { return resting_; }

  /// Full structural recount of resting volume, for cross-checking the
  /// incremental ledger.
  Qty resting_volume_recount() const;

  /// Walks levels best-first; fn(side, price, queue).
  void for_each_level(
      const std::function<void(Side, Ticks, const LevelQueue&)>& fn) const;

 private:
  ApplyResult submit(const OrderEvent& ev);
  ApplyResult cancel(const OrderEvent& ev);
  void check_not_crossed() const;

  std::map<Ticks, LevelQueue, std::greater<Ticks>> bids_;
  std::map<Ticks, LevelQueue> asks_;

  struct Location {
    Side side;
    Ticks price;
    LevelQueue::iterator it;
  };
  std::unordered_map<OrderId, Location> index_;

  Qty submitted_ = 0;
  Qty executed_ = 0;
  Qty canceled_ = 0;
  Qty resting_ = 0;
};

enum class IdentityOutcome : std::uint8_t { Holds, Violated, NotApplicable };

/// Checks the exact mid-shift identity for a marketable order, in half-ticks.
/// Filled buy:          dp = a1(post) - a1(pre)
/// Partially filled buy: dp = [a1(post) - a1(pre)] + [pi - b1(pre)]
/// (mirror formulas for sells). NotApplicable when either mid is undefined
/// or the order was not marketable.
IdentityOutcome mid_shift_identity(const Quotes& pre, const OrderEvent& ev,
                                   const Quotes& post, FillStatus status);

}  // namespace impactlab::lob
