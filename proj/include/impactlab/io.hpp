#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "impactlab/impact.hpp"
#include "impactlab/order_book.hpp"
#include "impactlab/trades.hpp"
#include "impactlab/types.hpp"

namespace impactlab::io {

/// Shortest round-trip decimal representation; deterministic and parses
/// back to the identical double.
std::string format_double(double v);

// ---------------------------------------------------------------------------
// Event CSV. Header: seq,ts_ns,stock,kind,order_id,side,price_ticks,size
// kind in {S,C}; side in {B,S}; prices in integer ticks; UTF-8, LF endings.
// Cancel rows carry the target's side and zero price/size.
// ---------------------------------------------------------------------------

struct EventStreams {
  std::map<std::string, std::vector<lob::OrderEvent>> by_stock;
  std::uint64_t rows = 0;
};

/// Parses and validates an event CSV. Rejects malformed rows with
/// line/column diagnostics; enforces strictly increasing seq per stock and,
/// under the lot rule, buy sizes that are multiples of 100.
EventStreams read_events_csv(const std::filesystem::path& path, bool lot_rule);

void write_events_csv(
    const std::filesystem::path& path,
    const std::map<std::string, std::vector<lob::OrderEvent>>& by_stock);

// ---------------------------------------------------------------------------
// Trades CSV. Header:
//   stock,seq,ts_ns,omega,direction,aggressiveness,pre_mid_ht,post_mid_ht,r
// direction in {B,S}; aggressiveness in {F,P}; mids in integer half-ticks.
// r is informational; readers recompute it exactly from the mids.
// ---------------------------------------------------------------------------

void write_trades_csv(
    const std::filesystem::path& path,
    const std::map<std::string, std::vector<trades::Trade>>& by_stock);

std::map<std::string, std::vector<trades::Trade>> read_trades_csv(
    const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Stock metadata CSV. Header: code,c_tot_msh,c_msh,turnover_pct,n_trades_k
// ---------------------------------------------------------------------------

std::vector<trades::StockMeta> read_meta_csv(
    const std::filesystem::path& path);

void write_meta_csv(const std::filesystem::path& path,
                    std::span<const trades::StockMeta> meta);

/// Curve CSV: bin_mean_omega,bin_mean_r,count
void write_curve_csv(const std::filesystem::path& path,
                     const impact::ImpactCurve& curve);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path,
                     const std::string& content);

}  // namespace impactlab::io
