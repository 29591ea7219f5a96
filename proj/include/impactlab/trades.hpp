#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "impactlab/order_book.hpp"
#include "impactlab/types.hpp"

namespace impactlab::trades {

enum class Direction : std::uint8_t { BuyerInit, SellerInit };
enum class Aggressiveness : std::uint8_t { Filled, PartiallyFilled };

// The four trade classes: partially filled / filled x buy / sell.
enum class TradeType : std::uint8_t { PB = 0, PS = 1, FB = 2, FS = 3 };
inline constexpr std::array<const char*, 4> kTradeTypeNames = {"PB", "PS", "FB",
                                                               "FS"};

inline TradeType trade_type(Direction d, Aggressiveness a) {
  const bool buy = d == Direction::BuyerInit;
  const bool partial = a == Aggressiveness::PartiallyFilled;
  if (partial) return buy ? TradeType::PB : TradeType::PS;
  return buy ? TradeType::FB : TradeType::FS;
}

/// One aggregate trade: the full execution sweep of a single incoming
/// marketable order. r is the percentage mid-price return over the sweep,
/// computed from exact half-tick mids.
struct Trade {
  Seq seq{};
  std::int64_t ts_ns{};
  Qty omega{};
  double r{};
  Direction direction{Direction::BuyerInit};
  Aggressiveness aggressiveness{Aggressiveness::Filled};
  HalfTicks pre_mid{};
  HalfTicks post_mid{};

  TradeType type() const { return trade_type(direction, aggressiveness); }
};

/// Per-stock reference metadata: float capitalization C and total
/// capitalization (million shares), annual turnover (%), trade count
/// (thousands).
struct StockMeta {
  std::string code;
  double c_tot_msh{};
  double c_msh{};
  double turnover_pct{};
  double n_trades_k{};
};

/// Builds the aggregate trade for one marketable order, or nothing when
/// either mid is undefined (one-sided book; the event is skipped upstream).
std::optional<Trade> build_trade(const lob::OrderEvent& ev,
                                 std::span<const lob::Execution> executions,
                                 lob::FillStatus status,
                                 std::optional<HalfTicks> pre_mid,
                                 std::optional<HalfTicks> post_mid);

struct TypeStats {
  std::uint64_t count = 0;
  double mean_r = 0.0;      // signed
  double mean_omega = 0.0;
};

/// Per-type counts and arithmetic means; cells with count == 0 are the
/// EmptyType condition and are skipped downstream.
struct ClassifyResult {
  std::array<TypeStats, 4> by_type{};  // indexed by TradeType

  const TypeStats& of(TradeType t) const {
    return by_type[static_cast<std::size_t>(t)];
  }
};

ClassifyResult classify_counts(std::span<const Trade> trades);

/// Fraction of trades of the given filled type with r == 0 exactly;
/// nullopt when the type cell is empty.
std::optional<double> zero_shift_fraction(std::span<const Trade> trades,
                                          TradeType type);

struct ReplayCounters {
  std::uint64_t events = 0;
  std::uint64_t submits = 0;
  std::uint64_t cancels = 0;
  std::uint64_t marketable = 0;
  std::uint64_t trades_built = 0;
  std::uint64_t skipped_one_sided = 0;
};

/// Replays an event stream through a fresh book and reconstructs the
/// aggregate trades. Trades against a one-sided book are excluded and
/// counted in the skip report.
std::vector<Trade> reconstruct_trades(std::span<const lob::OrderEvent> events,
                                      ReplayCounters* counters = nullptr);

}  // namespace impactlab::trades
