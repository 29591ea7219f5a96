#include "impactlab/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

#include "impactlab/collapse.hpp"
#include "impactlab/impact.hpp"
#include "impactlab/io.hpp"
#include "impactlab/order_flow.hpp"
#include "impactlab/stats.hpp"
#include "impactlab/tails.hpp"
#include "impactlab/trades.hpp"
#include "json.hpp"

namespace impactlab::pipeline {

using json = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw ValidationError("expected boolean 0/1, got '" + v + "'");
}

template <typename T>
T parse_number(const std::string& v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw ValidationError("expected number, got '" + v + "'");
  return out;
}

}  // namespace

Stage parse_stage(const std::string& name) {
  if (name == "all") return Stage::All;
  if (name == "simulate") return Stage::Simulate;
  if (name == "trades") return Stage::Trades;
  if (name == "impact") return Stage::Impact;
  if (name == "collapse") return Stage::Collapse;
  if (name == "tails") return Stage::Tails;
  if (name == "summary") return Stage::Summary;
  throw ValidationError("unknown stage '" + name + "'");
}

void apply_override(Config& c, const std::string& key,
                    const std::string& value) {
  if (key == "input")
    c.input = value;
  else if (key == "meta")
    c.meta = value;
  else if (key == "out")
    c.out = value;
  else if (key == "synthetic")
    c.synthetic = parse_bool(value);
  else if (key == "seed")
    c.seed = parse_number<std::uint64_t>(value);
  else if (key == "bins")
    c.bins = parse_number<int>(value);
  else if (key == "collapse_bins")
    c.collapse_bins = parse_number<int>(value);
  else if (key == "collapse_equal_width")
    c.collapse_equal_width = parse_bool(value);
  else if (key == "collapse_coarse_step")
    c.collapse_coarse_step = parse_number<double>(value);
  else if (key == "collapse_fine_step")
    c.collapse_fine_step = parse_number<double>(value);
  else if (key == "collapse_max_points")
    c.collapse_max_points = parse_number<std::size_t>(value);
  else if (key == "dump_surface")
    c.dump_surface = parse_bool(value);
  else if (key == "tail_lo")
    c.tail_lo = parse_number<double>(value);
  else if (key == "tail_hi")
    c.tail_hi = parse_number<double>(value);
  else if (key == "mixture_fit_min_omega")
    c.mixture_fit_min_omega = parse_number<double>(value);
  else if (key == "fit_raw_pairs")
    c.fit_raw_pairs = parse_bool(value);
  else if (key == "lot_rule")
    c.lot_rule = parse_bool(value);
  else if (key == "day_ns")
    c.day_ns = parse_number<std::int64_t>(value);
  else if (key == "n_stocks")
    c.n_stocks = parse_number<int>(value);
  else if (key == "events_per_stock")
    c.events_per_stock = parse_number<std::uint64_t>(value);
  else if (key == "p_cancel")
    c.p_cancel = parse_number<double>(value);
  else if (key == "p_buy")
    c.p_buy = parse_number<double>(value);
  else if (key == "size_tail")
    c.size_tail = parse_number<double>(value);
  else if (key == "marketable_fraction")
    c.marketable_fraction = parse_number<double>(value);
  else if (key == "placement_width")
    c.placement_width = parse_number<double>(value);
  else if (key == "size_min")
    c.size_min = parse_number<Qty>(value);
  else if (key == "initial_mid")
    c.initial_mid = parse_number<Ticks>(value);
  else if (key == "ts_step_ns")
    c.ts_step_ns = parse_number<std::int64_t>(value);
  else
    throw ValidationError("unknown config key '" + key + "'");
}

Config load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  Config c;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\r' ||
                             line.back() == '\t'))
      line.pop_back();
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(lineno) +
                            ": expected key=value");
    apply_override(c, line.substr(0, eq), line.substr(eq + 1));
  }
  return c;
}

namespace {

void validate(const Config& c) {
  if (!c.synthetic && c.input.empty())
    throw ValidationError("need either synthetic=1 or input=<events.csv>");
  if (c.synthetic && !c.input.empty())
    throw ValidationError("synthetic and input are mutually exclusive");
  if (c.bins < 2) throw ValidationError("bins must be >= 2");
  if (c.collapse_bins < 2) throw ValidationError("collapse_bins must be >= 2");
  if (!(c.collapse_coarse_step > 0.0) || !(c.collapse_fine_step > 0.0))
    throw ValidationError("collapse grid steps must be positive");
  if (c.n_stocks < 0) throw ValidationError("n_stocks must be >= 0");
  if (!(c.tail_hi > c.tail_lo) || !(c.tail_lo > 0.0))
    throw ValidationError("need 0 < tail_lo < tail_hi");
  for (double p : {c.p_cancel, c.p_buy, c.marketable_fraction})
    if (p < 0.0 || p > 1.0)
      throw ValidationError("probabilities must be in [0,1]");
  if (!(c.size_tail > 1.0))
    throw ValidationError("size_tail must be > 1");
  if (c.size_min < 1) throw ValidationError("size_min must be >= 1");
  if (c.initial_mid < 2) throw ValidationError("initial_mid must be >= 2");
}

std::filesystem::path events_path(const Config& c) { return c.out / "events.csv"; }
std::filesystem::path meta_path(const Config& c) { return c.out / "meta.csv"; }
std::filesystem::path trades_path(const Config& c) { return c.out / "trades.csv"; }
std::filesystem::path stats_path(const Config& c) {
  return c.out / "trade_stats.json";
}
std::filesystem::path fits_path(const Config& c) {
  return c.out / "impact_fits.json";
}

void require(const std::filesystem::path& p, const char* producer) {
  if (!std::filesystem::exists(p))
    throw ValidationError("missing " + p.string() + "; run stage '" +
                          producer + "' first");
}

std::string stock_code(int k) {
  std::string s = std::to_string(k);
  while (s.size() < 2) s.insert(s.begin(), '0');
  return "S" + s;
}

// ---------------------------------------------------------------------------
// simulate: synthesize (or canonicalize) the event and metadata files
// ---------------------------------------------------------------------------

void stage_simulate(const Config& c) {
  std::map<std::string, std::vector<lob::OrderEvent>> by_stock;
  std::vector<trades::StockMeta> meta;

  if (c.synthetic) {
    const flow::CounterRng seeder(c.seed);
    for (int k = 0; k < c.n_stocks; ++k) {
      flow::FlowConfig fc;
      fc.seed = seeder.bits(1000, static_cast<std::uint64_t>(k));
      fc.n_events = c.events_per_stock;
      fc.p_cancel = c.p_cancel;
      fc.p_buy = c.p_buy;
      fc.size_tail = c.size_tail;
      fc.marketable_fraction = c.marketable_fraction;
      fc.placement_width = c.placement_width;
      fc.lot_rule = c.lot_rule ? flow::LotRule::BuyLots100 : flow::LotRule::None;
      fc.ts_step_ns = c.ts_step_ns;
      // Heterogeneous scales: price level sets the return quantum, the size
      // floor sets <omega>. Spread over roughly one order of magnitude.
      const double frac =
          c.n_stocks > 1 ? static_cast<double>(k) / (c.n_stocks - 1) : 0.0;
      fc.initial_mid = static_cast<Ticks>(
          std::llround(static_cast<double>(c.initial_mid) *
                       std::pow(10.0, frac)));
      fc.size_min = c.size_min * (1 + k % 4);

      auto& events = by_stock[stock_code(k)];
      events.reserve(fc.n_events);
      flow::generate(fc, [&](const lob::OrderEvent& ev) {
        events.push_back(ev);
      });

      trades::StockMeta m;
      m.code = stock_code(k);
      m.c_msh = 107.1 * std::pow(1406.5 / 107.1, frac);
      m.c_tot_msh = 1.5 * m.c_msh;
      m.turnover_pct = 0.0;
      m.n_trades_k = 0.0;
      meta.push_back(std::move(m));
    }
  } else {
    const io::EventStreams streams = io::read_events_csv(c.input, c.lot_rule);
    by_stock = streams.by_stock;
    if (c.meta.empty())
      throw ValidationError("input mode needs meta=<metadata.csv>");
    meta = io::read_meta_csv(c.meta);
  }

  io::write_events_csv(events_path(c), by_stock);
  io::write_meta_csv(meta_path(c), meta);
}

// ---------------------------------------------------------------------------
// trades: replay events per stock, classify, persist normalizers
// ---------------------------------------------------------------------------

void stage_trades(const Config& c) {
  require(events_path(c), "simulate");
  const io::EventStreams streams =
      io::read_events_csv(events_path(c), c.lot_rule);

  struct StockResult {
    std::vector<trades::Trade> trades;
    trades::ReplayCounters counters;
  };
  std::vector<std::string> codes;
  for (const auto& [code, events] : streams.by_stock) codes.push_back(code);

  std::vector<std::future<StockResult>> futures;
  futures.reserve(codes.size());
  for (const std::string& code : codes) {
    const auto& events = streams.by_stock.at(code);
    futures.push_back(std::async(std::launch::async, [&events]() {
      StockResult r;
      r.trades = trades::reconstruct_trades(events, &r.counters);
      return r;
    }));
  }

  std::map<std::string, std::vector<trades::Trade>> by_stock;
  json stats;
  stats["stocks"] = json::object();
  trades::ReplayCounters totals;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    StockResult r = futures[i].get();
    const trades::ClassifyResult cls = trades::classify_counts(r.trades);

    json s;
    s["counters"] = {{"events", r.counters.events},
                     {"submits", r.counters.submits},
                     {"cancels", r.counters.cancels},
                     {"marketable", r.counters.marketable},
                     {"trades_built", r.counters.trades_built},
                     {"skipped_one_sided", r.counters.skipped_one_sided}};
    s["types"] = json::object();
    for (int t = 0; t < 4; ++t) {
      const trades::TypeStats& cell = cls.by_type[t];
      s["types"][trades::kTradeTypeNames[t]] = {
          {"count", cell.count},
          {"mean_r", cell.count ? json(cell.mean_r) : json()},
          {"mean_omega", cell.count ? json(cell.mean_omega) : json()}};
    }
    const auto zs_fb =
        trades::zero_shift_fraction(r.trades, trades::TradeType::FB);
    const auto zs_fs =
        trades::zero_shift_fraction(r.trades, trades::TradeType::FS);
    s["zero_shift"] = {{"FB", zs_fb ? json(*zs_fb) : json()},
                       {"FS", zs_fs ? json(*zs_fs) : json()}};
    stats["stocks"][codes[i]] = std::move(s);

    totals.events += r.counters.events;
    totals.submits += r.counters.submits;
    totals.cancels += r.counters.cancels;
    totals.marketable += r.counters.marketable;
    totals.trades_built += r.counters.trades_built;
    totals.skipped_one_sided += r.counters.skipped_one_sided;
    by_stock[codes[i]] = std::move(r.trades);
  }
  stats["totals"] = {{"events", totals.events},
                     {"submits", totals.submits},
                     {"cancels", totals.cancels},
                     {"marketable", totals.marketable},
                     {"trades_built", totals.trades_built},
                     {"skipped_one_sided", totals.skipped_one_sided}};

  io::write_trades_csv(trades_path(c), by_stock);
  io::write_text_file(stats_path(c), stats.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// impact: curves and power-law fits
// ---------------------------------------------------------------------------

json fit_to_json(const impact::PowerLawFit& f) {
  return {{"prefactor", f.prefactor},
          {"exponent", f.exponent},
          {"exponent_stderr", f.exponent_stderr},
          {"omega_lo", f.omega_lo},
          {"omega_hi", std::isfinite(f.omega_hi) ? json(f.omega_hi) : json()},
          {"n_bins_used", f.n_bins_used}};
}

void stage_impact(const Config& c) {
  require(trades_path(c), "trades");
  const auto by_stock = io::read_trades_csv(trades_path(c));

  std::vector<impact::StockTrades> views;
  for (const auto& [code, ts] : by_stock) views.push_back({code, ts});

  const impact::CurveSet set = impact::build_all_curves(views, c.bins);

  for (const impact::ImpactCurve& curve : set.per_stock_raw)
    io::write_curve_csv(c.out / "curves" / (curve.stock + "_" + curve.type + ".csv"),
                        curve);
  for (const impact::ImpactCurve& curve : set.per_stock_normalized)
    io::write_curve_csv(
        c.out / "curves" / (curve.stock + "_" + curve.type + "_norm.csv"),
        curve);
  for (const impact::ImpactCurve& curve : set.aggregated)
    io::write_curve_csv(
        c.out / "curves" / ("ALL_" + curve.type + "_norm.csv"), curve);

  json fits;
  std::uint64_t fit_failures = 0;
  fits["per_stock"] = json::object();
  std::map<std::string, std::vector<double>> exps;  // per type, across stocks
  for (const impact::ImpactCurve& curve : set.per_stock_raw) {
    if (curve.type != "FB" && curve.type != "FS") continue;
    json& slot = fits["per_stock"][curve.stock];
    try {
      const impact::PowerLawFit f = impact::fit_power_law(curve);
      slot[curve.type] = fit_to_json(f);
      exps[curve.type].push_back(f.exponent);
    } catch (const TooFewPoints&) {
      slot[curve.type] = json();
      ++fit_failures;
    }
  }

  fits["per_stock_exponent_stats"] = json::object();
  for (const auto& [type, values] : exps) {
    const double mean = stats::mean(values);
    double sd = 0.0;
    if (values.size() > 1) {
      for (double v : values) sd += (v - mean) * (v - mean);
      sd = std::sqrt(sd / static_cast<double>(values.size() - 1));
    }
    fits["per_stock_exponent_stats"][type] = {
        {"mean", mean}, {"std", sd}, {"n", values.size()}};
  }

  fits["aggregated"] = json::object();
  for (const impact::ImpactCurve& curve : set.aggregated) {
    impact::FitRange range;
    if (curve.type == "AllBuy" || curve.type == "AllSell")
      range.omega_lo = c.mixture_fit_min_omega;
    try {
      fits["aggregated"][curve.type] = fit_to_json(
          impact::fit_power_law(curve, range));
    } catch (const TooFewPoints&) {
      fits["aggregated"][curve.type] = json();
      ++fit_failures;
    }
  }

  if (c.fit_raw_pairs) {
    fits["raw_pairs"] = json::object();
    for (const auto& [code, ts] : by_stock) {
      for (const char* type : {"FB", "FS"}) {
        std::vector<impact::Pair> prs;
        for (const trades::Trade& t : ts)
          if (std::string(trades::kTradeTypeNames[static_cast<int>(t.type())]) ==
              type)
            prs.emplace_back(static_cast<double>(t.omega), std::abs(t.r));
        try {
          fits["raw_pairs"][code][type] =
              fit_to_json(impact::fit_power_law_points(prs));
        } catch (const TooFewPoints&) {
          fits["raw_pairs"][code][type] = json();
          ++fit_failures;
        }
      }
    }
  }

  fits["skips"] = {{"cells_small", set.cells_skipped_small},
                   {"cells_zero_mean", set.cells_skipped_zero_mean},
                   {"fit_failures", fit_failures}};
  io::write_text_file(fits_path(c), fits.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// collapse: capitalization-scaling searches per trade type
// ---------------------------------------------------------------------------

json collapse_to_json(const collapse::CollapseResult& r, std::size_t points) {
  return {{"delta", r.delta},       {"gamma", r.gamma},
          {"R", r.r_quality},       {"eps_min", r.eps_min},
          {"eps_00", r.eps_00},     {"evaluations", r.evaluations},
          {"points", points}};
}

void stage_collapse(const Config& c) {
  require(trades_path(c), "trades");
  require(meta_path(c), "simulate");
  const auto by_stock = io::read_trades_csv(trades_path(c));
  const auto meta = io::read_meta_csv(meta_path(c));
  std::map<std::string, double> cap;
  for (const trades::StockMeta& m : meta) cap[m.code] = m.c_msh;

  json out;
  out["bins"] = c.collapse_bins;
  out["max_points"] = c.collapse_max_points;
  out["types"] = json::object();
  std::uint64_t skipped_cells = 0;

  for (int t = 0; t < 4; ++t) {
    const auto type = static_cast<trades::TradeType>(t);
    const std::string name = trades::kTradeTypeNames[t];

    collapse::NormalizationInput input;
    for (const auto& [code, ts] : by_stock) {
      const auto it = cap.find(code);
      if (it == cap.end())
        throw ValidationError("no metadata for stock " + code);

      std::vector<double> abs_r, omega;
      std::vector<std::vector<double>> sizes_by_day;
      std::int64_t current_day = std::numeric_limits<std::int64_t>::min();
      for (const trades::Trade& tr : ts) {
        if (tr.type() != type) continue;
        abs_r.push_back(std::abs(tr.r));
        omega.push_back(static_cast<double>(tr.omega));
        const std::int64_t day = tr.ts_ns / c.day_ns;
        if (day != current_day) {
          sizes_by_day.emplace_back();
          current_day = day;
        }
        sizes_by_day.back().push_back(static_cast<double>(tr.omega));
      }
      if (abs_r.empty()) continue;
      const double mean_abs_r = stats::mean(abs_r);
      const double mean_omega = stats::mean(omega);
      if (mean_abs_r == 0.0 || mean_omega == 0.0) {
        ++skipped_cells;
        continue;
      }
      collapse::NormalizationInput::Stock st;
      st.code = code;
      st.cap = it->second;
      st.mean_abs_r = mean_abs_r;
      st.abs_r = std::move(abs_r);
      st.omega_norm.reserve(omega.size());
      for (double w : omega) st.omega_norm.push_back(w / mean_omega);
      st.lc_x = collapse::lc_normalize(sizes_by_day);

      // Deterministic subsample to keep the grid search at desk scale.
      if (c.collapse_max_points > 0 &&
          st.abs_r.size() > c.collapse_max_points) {
        const std::size_t stride =
            (st.abs_r.size() + c.collapse_max_points - 1) /
            c.collapse_max_points;
        collapse::NormalizationInput::Stock sub;
        sub.code = st.code;
        sub.cap = st.cap;
        sub.mean_abs_r = st.mean_abs_r;
        for (std::size_t i = 0; i < st.abs_r.size(); i += stride) {
          sub.abs_r.push_back(st.abs_r[i]);
          sub.omega_norm.push_back(st.omega_norm[i]);
          sub.lc_x.push_back(st.lc_x[i]);
        }
        st = std::move(sub);
      }
      input.stocks.push_back(std::move(st));
    }

    std::size_t n_points = 0;
    for (const auto& st : input.stocks) n_points += st.abs_r.size();
    if (input.stocks.size() < 2 ||
        n_points < static_cast<std::size_t>(c.collapse_bins)) {
      out["types"][name] = json();
      ++skipped_cells;
      continue;
    }

    collapse::GridSpec spec;
    spec.n_bins = c.collapse_bins;
    spec.coarse_step = c.collapse_coarse_step;
    spec.fine_step = c.collapse_fine_step;
    spec.bin_mode = c.collapse_equal_width ? collapse::BinMode::EqualWidth
                                           : collapse::BinMode::EqualCount;
    spec.capture_surface = c.dump_surface;
    const collapse::NormalizationReport report =
        collapse::compare_normalizations(input, spec);

    out["types"][name] = {
        {"lfm", collapse_to_json(report.lfm, n_points)},
        {"lc", collapse_to_json(report.lc, n_points)},
        {"double_normalization_R", report.r_double_norm}};

    if (c.dump_surface && !report.lfm.surface.empty()) {
      std::ostringstream surf;
      surf << "delta,gamma,epsilon\n";
      for (const collapse::SurfacePoint& p : report.lfm.surface)
        surf << io::format_double(p.delta) << ',' << io::format_double(p.gamma)
             << ',' << io::format_double(p.epsilon) << '\n';
      io::write_text_file(c.out / ("epsilon_surface_" + name + "_lfm.csv"),
                          surf.str());
    }
  }
  out["skipped_cells"] = skipped_cells;
  io::write_text_file(c.out / "collapse.json", out.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// tails: CCDF tail fits and the exponent-relation table
// ---------------------------------------------------------------------------

struct TailCell {
  std::optional<tails::TailFit> ols;
  std::optional<tails::TailFit> hill;
};

json tail_fit_to_json(const tails::TailFit& f) {
  return {{"exponent", f.exponent},
          {"stderr", f.exponent_stderr},
          {"x_lo", f.x_lo},
          {"x_hi", f.x_hi},
          {"n_tail", f.n_tail},
          {"upper_bound_ignored", f.upper_bound_ignored}};
}

json tail_cell_to_json(const TailCell& cell) {
  return {{"ccdf_ols", cell.ols ? tail_fit_to_json(*cell.ols) : json()},
          {"hill", cell.hill ? tail_fit_to_json(*cell.hill) : json()}};
}

TailCell fit_both(std::span<const double> sample, double lo, double hi,
                  std::uint64_t* skips) {
  TailCell cell;
  try {
    cell.ols = tails::fit_tail(sample, lo, hi, tails::TailMethod::CcdfOls);
  } catch (const Error&) {
    ++*skips;
  }
  try {
    cell.hill = tails::fit_tail(sample, lo, hi, tails::TailMethod::Hill);
  } catch (const Error&) {
    ++*skips;
  }
  return cell;
}

TailCell fit_auto(std::span<const double> sample, std::uint64_t* skips) {
  try {
    const auto [lo, hi] = tails::select_tail_range(sample);
    return fit_both(sample, lo, hi, skips);
  } catch (const Error&) {
    ++*skips;
    return {};
  }
}

std::string csv_cell(const std::optional<double>& v) {
  return v ? io::format_double(*v) : std::string();
}

void stage_tails(const Config& c) {
  require(trades_path(c), "trades");
  require(fits_path(c), "impact");
  const auto by_stock = io::read_trades_csv(trades_path(c));
  const json fits = json::parse(io::read_text_file(fits_path(c)));

  json out;
  out["range"] = {{"x_lo", c.tail_lo}, {"x_hi", c.tail_hi}};
  std::uint64_t skips = 0;

  struct Row {
    std::optional<double> alpha_omega, alpha_r, ratio, alpha, deviation;
  };
  std::map<std::string, std::array<Row, 2>> rows;  // per stock: [buy, sell]
  std::array<std::vector<double>, 2> pooled_sizes, pooled_returns;

  out["per_stock"] = json::object();
  for (const auto& [code, ts] : by_stock) {
    json per;
    for (int side = 0; side < 2; ++side) {
      const auto type = side == 0 ? trades::TradeType::FB : trades::TradeType::FS;
      std::vector<double> sizes, returns;
      double sum_w = 0.0, sum_r = 0.0;
      std::size_t n = 0;
      for (const trades::Trade& t : ts) {
        if (t.type() != type) continue;
        sum_w += static_cast<double>(t.omega);
        sum_r += std::abs(t.r);
        ++n;
      }
      if (n == 0) {
        per[side == 0 ? "buy" : "sell"] = json();
        continue;
      }
      const double mean_w = sum_w / static_cast<double>(n);
      const double mean_r = sum_r / static_cast<double>(n);
      for (const trades::Trade& t : ts) {
        if (t.type() != type) continue;
        const double w_norm = static_cast<double>(t.omega) / mean_w;
        sizes.push_back(w_norm);
        pooled_sizes[side].push_back(w_norm);
        if (t.r != 0.0 && mean_r > 0.0) {
          // zero returns carry no tail information
          const double r_norm = std::abs(t.r) / mean_r;
          returns.push_back(r_norm);
          pooled_returns[side].push_back(r_norm);
        }
      }
      const TailCell size_cell = fit_auto(sizes, &skips);
      const TailCell ret_cell = fit_auto(returns, &skips);

      Row row;
      if (size_cell.ols) row.alpha_omega = size_cell.ols->exponent;
      if (ret_cell.ols) row.alpha_r = ret_cell.ols->exponent;
      const json& stock_fits = fits["per_stock"].contains(code)
                                   ? fits["per_stock"][code]
                                   : json();
      const char* type_name = side == 0 ? "FB" : "FS";
      if (stock_fits.is_object() && stock_fits.contains(type_name) &&
          stock_fits[type_name].is_object())
        row.alpha = stock_fits[type_name]["exponent"].get<double>();
      if (row.alpha_omega && row.alpha_r) {
        row.ratio = *row.alpha_omega / *row.alpha_r;
        if (row.alpha) row.deviation = (*row.ratio - *row.alpha) / *row.alpha;
      }
      rows[code][side] = row;

      per[side == 0 ? "buy" : "sell"] = {
          {"sizes", tail_cell_to_json(size_cell)},
          {"returns", tail_cell_to_json(ret_cell)}};
    }
    out["per_stock"][code] = std::move(per);
  }

  // Aggregates over pooled normalized values: the fixed scaling range plus
  // an auto-selected fallback.
  out["aggregate"] = json::object();
  std::array<Row, 2> all_row;
  for (int side = 0; side < 2; ++side) {
    json agg;
    TailCell size_fixed = fit_both(pooled_sizes[side], c.tail_lo, c.tail_hi, &skips);
    TailCell ret_fixed =
        fit_both(pooled_returns[side], c.tail_lo, c.tail_hi, &skips);
    TailCell size_auto = fit_auto(pooled_sizes[side], &skips);
    TailCell ret_auto = fit_auto(pooled_returns[side], &skips);
    agg["sizes_fixed_range"] = tail_cell_to_json(size_fixed);
    agg["returns_fixed_range"] = tail_cell_to_json(ret_fixed);
    agg["sizes_auto_range"] = tail_cell_to_json(size_auto);
    agg["returns_auto_range"] = tail_cell_to_json(ret_auto);

    // ALL row takes the fixed range when it fit, else the auto range.
    Row row;
    const TailCell& size_cell = size_fixed.ols ? size_fixed : size_auto;
    const TailCell& ret_cell = ret_fixed.ols ? ret_fixed : ret_auto;
    if (size_cell.ols) row.alpha_omega = size_cell.ols->exponent;
    if (ret_cell.ols) row.alpha_r = ret_cell.ols->exponent;
    const char* type_name = side == 0 ? "FB" : "FS";
    if (fits["aggregated"].contains(type_name) &&
        fits["aggregated"][type_name].is_object())
      row.alpha = fits["aggregated"][type_name]["exponent"].get<double>();
    if (row.alpha_omega && row.alpha_r) {
      row.ratio = *row.alpha_omega / *row.alpha_r;
      if (row.alpha) row.deviation = (*row.ratio - *row.alpha) / *row.alpha;
    }
    all_row[side] = row;
    out["aggregate"][side == 0 ? "buy" : "sell"] = std::move(agg);
  }
  out["skipped_fits"] = skips;
  io::write_text_file(c.out / "tails.json", out.dump(2) + "\n");

  for (int side = 0; side < 2; ++side) {
    const char* tag = side == 0 ? "buy" : "sell";
    const std::array<std::pair<const char*, const std::vector<double>*>, 2>
        dumps = {{{"sizes", &pooled_sizes[side]},
                  {"returns", &pooled_returns[side]}}};
    for (const auto& [what, sample] : dumps) {
      if (sample->empty()) continue;
      std::ostringstream csv;
      csv << "x,ccdf\n";
      for (const auto& [x, p] : tails::ccdf(*sample))
        csv << io::format_double(x) << ',' << io::format_double(p) << '\n';
      io::write_text_file(
          c.out / "ccdf" / (std::string(tag) + "_" + what + ".csv"),
          csv.str());
    }
  }

  // Relation table, one row per stock plus MEAN/STD/ALL.
  std::ostringstream table;
  table << "code,buy_alpha_omega,buy_alpha_r,buy_ratio,buy_alpha,buy_D,"
           "sell_alpha_omega,sell_alpha_r,sell_ratio,sell_alpha,sell_D\n";
  std::array<std::array<std::vector<double>, 4>, 2> columns;
  auto emit_row = [&](const std::string& code, const std::array<Row, 2>& r) {
    table << code;
    for (int side = 0; side < 2; ++side) {
      table << ',' << csv_cell(r[side].alpha_omega) << ','
            << csv_cell(r[side].alpha_r) << ',' << csv_cell(r[side].ratio)
            << ',' << csv_cell(r[side].alpha) << ','
            << csv_cell(r[side].deviation);
    }
    table << '\n';
  };
  for (const auto& [code, r] : rows) {
    emit_row(code, r);
    for (int side = 0; side < 2; ++side) {
      if (r[side].alpha_omega) columns[side][0].push_back(*r[side].alpha_omega);
      if (r[side].alpha_r) columns[side][1].push_back(*r[side].alpha_r);
      if (r[side].ratio) columns[side][2].push_back(*r[side].ratio);
      if (r[side].alpha) columns[side][3].push_back(*r[side].alpha);
    }
  }
  std::array<Row, 2> mean_row, std_row;
  for (int side = 0; side < 2; ++side) {
    std::array<std::optional<double>*, 4> mean_slots = {
        &mean_row[side].alpha_omega, &mean_row[side].alpha_r,
        &mean_row[side].ratio, &mean_row[side].alpha};
    std::array<std::optional<double>*, 4> std_slots = {
        &std_row[side].alpha_omega, &std_row[side].alpha_r,
        &std_row[side].ratio, &std_row[side].alpha};
    for (int col = 0; col < 4; ++col) {
      const auto& v = columns[side][col];
      if (v.empty()) continue;
      const double m = stats::mean(v);
      *mean_slots[col] = m;
      if (v.size() > 1) {
        double sd = 0.0;
        for (double x : v) sd += (x - m) * (x - m);
        *std_slots[col] = std::sqrt(sd / static_cast<double>(v.size() - 1));
      }
    }
  }
  emit_row("MEAN", mean_row);
  emit_row("STD", std_row);
  emit_row("ALL", all_row);
  io::write_text_file(c.out / "relation_table.csv", table.str());
}

// ---------------------------------------------------------------------------
// summary
// ---------------------------------------------------------------------------

json config_to_json(const Config& c) {
  return {{"input", c.input.string()},
          {"meta", c.meta.string()},
          {"out", c.out.string()},
          {"synthetic", c.synthetic},
          {"seed", c.seed},
          {"bins", c.bins},
          {"collapse_bins", c.collapse_bins},
          {"collapse_equal_width", c.collapse_equal_width},
          {"collapse_coarse_step", c.collapse_coarse_step},
          {"collapse_fine_step", c.collapse_fine_step},
          {"collapse_max_points", c.collapse_max_points},
          {"tail_lo", c.tail_lo},
          {"tail_hi", c.tail_hi},
          {"mixture_fit_min_omega", c.mixture_fit_min_omega},
          {"fit_raw_pairs", c.fit_raw_pairs},
          {"lot_rule", c.lot_rule},
          {"day_ns", c.day_ns},
          {"n_stocks", c.n_stocks},
          {"events_per_stock", c.events_per_stock},
          {"p_cancel", c.p_cancel},
          {"p_buy", c.p_buy},
          {"size_tail", c.size_tail},
          {"marketable_fraction", c.marketable_fraction},
          {"placement_width", c.placement_width},
          {"size_min", c.size_min},
          {"initial_mid", c.initial_mid},
          {"ts_step_ns", c.ts_step_ns}};
}

void stage_summary(const Config& c) {
  json out;
  out["config"] = config_to_json(c);
  out["stages"] = json::object();
  const std::array<std::pair<const char*, std::filesystem::path>, 4> inputs = {
      {{"trades", stats_path(c)},
       {"impact", fits_path(c)},
       {"collapse", c.out / "collapse.json"},
       {"tails", c.out / "tails.json"}}};
  for (const auto& [name, path] : inputs) {
    if (!std::filesystem::exists(path)) {
      out["stages"][name] = json();
      continue;
    }
    const json stage = json::parse(io::read_text_file(path));
    json entry;
    if (std::string(name) == "trades") {
      entry["totals"] = stage["totals"];
    } else if (std::string(name) == "impact") {
      entry["skips"] = stage["skips"];
    } else if (std::string(name) == "collapse") {
      entry["skipped_cells"] = stage["skipped_cells"];
    } else {
      entry["skipped_fits"] = stage["skipped_fits"];
    }
    out["stages"][name] = std::move(entry);
  }
  io::write_text_file(c.out / "summary.json", out.dump(2) + "\n");
}

}  // namespace

void run(const Config& config, Stage stage) {
  validate(config);
  std::filesystem::create_directories(config.out);
  switch (stage) {
    case Stage::Simulate:
      stage_simulate(config);
      return;
    case Stage::Trades:
      stage_trades(config);
      return;
    case Stage::Impact:
      stage_impact(config);
      return;
    case Stage::Collapse:
      stage_collapse(config);
      return;
    case Stage::Tails:
      stage_tails(config);
      return;
    case Stage::Summary:
      stage_summary(config);
      return;
    case Stage::All:
      stage_simulate(config);
      stage_trades(config);
      stage_impact(config);
      stage_collapse(config);
      stage_tails(config);
      stage_summary(config);
      return;
  }
}

}  // namespace impactlab::pipeline
