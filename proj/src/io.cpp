#include "impactlab/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace impactlab::io {

namespace {

constexpr const char* kEventHeader =
    "seq,ts_ns,stock,kind,order_id,side,price_ticks,size";
constexpr const char* kTradeHeader =
    "stock,seq,ts_ns,omega,direction,aggressiveness,pre_mid_ht,post_mid_ht,r";
constexpr const char* kMetaHeader = "code,c_tot_msh,c_msh,turnover_pct,n_trades_k";

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_int(std::string_view field, std::size_t line, std::size_t column) {
  T value{};
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw ParseError(line, column,
                     "expected integer, got '" + std::string(field) + "'");
  return value;
}

double parse_double(std::string_view field, std::size_t line,
                    std::size_t column) {
  double value{};
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw ParseError(line, column,
                     "expected number, got '" + std::string(field) + "'");
  return value;
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

EventStreams read_events_csv(const std::filesystem::path& path,
                             bool lot_rule) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());

  EventStreams streams;
  std::string line;
  std::size_t lineno = 0;
  std::map<std::string, Seq> last_seq;

  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view sv = strip_cr(line);
    if (lineno == 1) {
      if (sv != kEventHeader)
        throw ParseError(1, 1, "bad header, expected '" +
                                   std::string(kEventHeader) + "'");
      continue;
    }
    if (sv.empty()) continue;
    const auto fields = split_fields(sv);
    if (fields.size() != 8)
      throw ParseError(lineno, fields.size(),
                       "expected 8 fields, got " +
                           std::to_string(fields.size()));

    lob::OrderEvent ev;
    ev.seq = parse_int<Seq>(fields[0], lineno, 1);
    ev.ts_ns = parse_int<std::int64_t>(fields[1], lineno, 2);
    const std::string stock(fields[2]);
    if (stock.empty()) throw ParseError(lineno, 3, "empty stock code");

    if (fields[3] == "S")
      ev.kind = lob::EventKind::Submit;
    else if (fields[3] == "C")
      ev.kind = lob::EventKind::Cancel;
    else
      throw ParseError(lineno, 4, "kind must be S or C");

    ev.order_id = parse_int<OrderId>(fields[4], lineno, 5);
    if (fields[5] == "B")
      ev.side = lob::Side::Buy;
    else if (fields[5] == "S")
      ev.side = lob::Side::Sell;
    else
      throw ParseError(lineno, 6, "side must be B or S");

    ev.price = parse_int<Ticks>(fields[6], lineno, 7);
    ev.size = parse_int<Qty>(fields[7], lineno, 8);

    if (ev.kind == lob::EventKind::Submit) {
      if (ev.price < 1) throw ParseError(lineno, 7, "price below one tick");
      if (ev.size < 1) throw ParseError(lineno, 8, "non-positive size");
      if (lot_rule && ev.side == lob::Side::Buy && ev.size % 100 != 0)
        throw ParseError(lineno, 8,
                         "buy size " + std::to_string(ev.size) +
                             " violates the 100-share lot rule");
    }

    auto [it, inserted] = last_seq.try_emplace(stock, ev.seq);
    if (!inserted) {
      if (ev.seq <= it->second)
        throw NonMonotoneSeq("non-monotone seq " + std::to_string(ev.seq) +
                             " for stock " + stock + " at line " +
                             std::to_string(lineno));
      it->second = ev.seq;
    }
    streams.by_stock[stock].push_back(ev);
    ++streams.rows;
  }
  if (lineno == 0) throw ParseError(0, 0, "empty file, header required");
  return streams;
}

void write_events_csv(
    const std::filesystem::path& path,
    const std::map<std::string, std::vector<lob::OrderEvent>>& by_stock) {
  std::ostringstream out;
  out << kEventHeader << '\n';
  for (const auto& [stock, events] : by_stock) {
    for (const lob::OrderEvent& ev : events) {
      out << ev.seq << ',' << ev.ts_ns << ',' << stock << ','
          << (ev.kind == lob::EventKind::Submit ? 'S' : 'C') << ','
          << ev.order_id << ',' << (ev.side == lob::Side::Buy ? 'B' : 'S')
          << ',' << ev.price << ',' << ev.size << '\n';
    }
  }
  write_text_file(path, out.str());
}

void write_trades_csv(
    const std::filesystem::path& path,
    const std::map<std::string, std::vector<trades::Trade>>& by_stock) {
  std::ostringstream out;
  out << kTradeHeader << '\n';
  for (const auto& [stock, ts] : by_stock) {
    for (const trades::Trade& t : ts) {
      out << stock << ',' << t.seq << ',' << t.ts_ns << ',' << t.omega << ','
          << (t.direction == trades::Direction::BuyerInit ? 'B' : 'S') << ','
          << (t.aggressiveness == trades::Aggressiveness::Filled ? 'F' : 'P')
          << ',' << t.pre_mid << ',' << t.post_mid << ','
          << format_double(t.r) << '\n';
    }
  }
  write_text_file(path, out.str());
}

std::map<std::string, std::vector<trades::Trade>> read_trades_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());

  std::map<std::string, std::vector<trades::Trade>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view sv = strip_cr(line);
    if (lineno == 1) {
      if (sv != kTradeHeader) throw ParseError(1, 1, "bad trades header");
      continue;
    }
    if (sv.empty()) continue;
    const auto fields = split_fields(sv);
    if (fields.size() != 9)
      throw ParseError(lineno, fields.size(), "expected 9 fields");

    trades::Trade t;
    const std::string stock(fields[0]);
    t.seq = parse_int<Seq>(fields[1], lineno, 2);
    t.ts_ns = parse_int<std::int64_t>(fields[2], lineno, 3);
    t.omega = parse_int<Qty>(fields[3], lineno, 4);
    if (fields[4] == "B")
      t.direction = trades::Direction::BuyerInit;
    else if (fields[4] == "S")
      t.direction = trades::Direction::SellerInit;
    else
      throw ParseError(lineno, 5, "direction must be B or S");
    if (fields[5] == "F")
      t.aggressiveness = trades::Aggressiveness::Filled;
    else if (fields[5] == "P")
      t.aggressiveness = trades::Aggressiveness::PartiallyFilled;
    else
      throw ParseError(lineno, 6, "aggressiveness must be F or P");
    t.pre_mid = parse_int<HalfTicks>(fields[6], lineno, 7);
    t.post_mid = parse_int<HalfTicks>(fields[7], lineno, 8);
    // r recomputed from the exact mids; the stored column is informational.
    t.r = static_cast<double>(t.post_mid - t.pre_mid) /
          static_cast<double>(t.pre_mid);
    out[stock].push_back(t);
  }
  if (lineno == 0) throw ParseError(0, 0, "empty file, header required");
  return out;
}

std::vector<trades::StockMeta> read_meta_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());

  std::vector<trades::StockMeta> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view sv = strip_cr(line);
    if (lineno == 1) {
      if (sv != kMetaHeader) throw ParseError(1, 1, "bad metadata header");
      continue;
    }
    if (sv.empty()) continue;
    const auto fields = split_fields(sv);
    if (fields.size() != 5)
      throw ParseError(lineno, fields.size(), "expected 5 fields");
    trades::StockMeta m;
    m.code = std::string(fields[0]);
    m.c_tot_msh = parse_double(fields[1], lineno, 2);
    m.c_msh = parse_double(fields[2], lineno, 3);
    m.turnover_pct = parse_double(fields[3], lineno, 4);
    m.n_trades_k = parse_double(fields[4], lineno, 5);
    if (!(m.c_msh > 0.0) || m.c_msh > m.c_tot_msh)
      throw ParseError(lineno, 3, "need 0 < C <= C_tot");
    out.push_back(std::move(m));
  }
  if (lineno == 0) throw ParseError(0, 0, "empty file, header required");
  return out;
}

void write_meta_csv(const std::filesystem::path& path,
                    std::span<const trades::StockMeta> meta) {
  std::ostringstream out;
  out << kMetaHeader << '\n';
  for (const trades::StockMeta& m : meta) {
    out << m.code << ',' << format_double(m.c_tot_msh) << ','
        << format_double(m.c_msh) << ',' << format_double(m.turnover_pct)
        << ',' << format_double(m.n_trades_k) << '\n';
  }
  write_text_file(path, out.str());
}

void write_curve_csv(const std::filesystem::path& path,
                     const impact::ImpactCurve& curve) {
  std::ostringstream out;
  out << "bin_mean_omega,bin_mean_r,count\n";
  for (const impact::Bin& b : curve.bins)
    out << format_double(b.mean_omega) << ',' << format_double(b.mean_r)
        << ',' << b.count << '\n';
  write_text_file(path, out.str());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

}  // namespace impactlab::io
