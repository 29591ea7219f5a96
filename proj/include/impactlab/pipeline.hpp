#pragma once

#include <filesystem>
#include <string>

#include "impactlab/types.hpp"

namespace impactlab::pipeline {

struct ValidationError : Error {
  using Error::Error;
};

enum class Stage : std::uint8_t {
  All,
  Simulate,
  Trades,
  Impact,
  Collapse,
  Tails,
  Summary
};

Stage parse_stage(const std::string& name);

struct Config {
  std::filesystem::path input;  // event CSV; empty => synthetic generation
  std::filesystem::path meta;   // stock metadata CSV (optional when synthetic)
  std::filesystem::path out = "out";
  bool synthetic = false;
  std::uint64_t seed = 1;

  int bins = 20;           // equal-count bins per (stock, type)
  int collapse_bins = 50;  // bins for the epsilon objective
  bool collapse_equal_width = false;  // equal-width instead of equal-count
  double collapse_coarse_step = 0.01;
  double collapse_fine_step = 0.001;
  std::size_t collapse_max_points = 10000;  // deterministic subsample cap
  bool dump_surface = false;
  double tail_lo = 15.9;
  double tail_hi = 141.0;
  double mixture_fit_min_omega = 100.0;  // AllBuy/AllSell fit range
  bool fit_raw_pairs = false;
  bool lot_rule = true;
  std::int64_t day_ns = 86'400'000'000'000;

  // synthetic flow
  int n_stocks = 3;
  std::uint64_t events_per_stock = 20000;
  double p_cancel = 0.15;
  double p_buy = 0.5;
  double size_tail = 1.5;
  double marketable_fraction = 0.35;
  double placement_width = 3.0;
  Qty size_min = 100;
  Ticks initial_mid = 1000;
  std::int64_t ts_step_ns = 1'000'000;
};

/// Flat key=value file; '#' starts a comment. Unknown keys are validation
/// errors.
Config load_config_file(const std::filesystem::path& path);

void apply_override(Config& config, const std::string& key,
                    const std::string& value);

/// Runs the requested stage (or the full chain) from persisted
/// intermediates in config.out. Deterministic given config + seed. Throws
/// ValidationError for bad inputs, Error for stage failures.
void run(const Config& config, Stage stage);

}  // namespace impactlab::pipeline
