#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace impactlab {

// Prices are integer counts of 0.01-RMB ticks; mid-prices are integer
// half-ticks so that (bid + ask)/2 is always representable exactly.
using Ticks = std::int64_t;
using HalfTicks = std::int64_t;
using Qty = std::int64_t;
using OrderId = std::uint64_t;
using Seq = std::uint64_t;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CancelUnknownOrder : Error {
  explicit CancelUnknownOrder(OrderId id)
      : Error("cancel of unknown or dead order id " + std::to_string(id)) {}
};

struct CrossedBookCorruption : Error {
  using Error::Error;
};

struct TooFewPoints : Error {
  using Error::Error;
};

struct ZeroMeanReturn : Error {
  using Error::Error;
};

struct DegenerateDenominator : Error {
  using Error::Error;
};

struct DegenerateBins : Error {
  using Error::Error;
};

struct EmptyDay : Error {
  using Error::Error;
};

struct TooFewTailPoints : Error {
  using Error::Error;
};

struct NonMonotoneSeq : Error {
  using Error::Error;
};

struct ParseError : Error {
  std::size_t line;
  std::size_t column;
  ParseError(std::size_t line_, std::size_t column_, const std::string& reason)
      : Error("parse error at line " + std::to_string(line_) + ", column " +
              std::to_string(column_) + ": " + reason),
        line(line_),
        column(column_) {}
};

}  // namespace impactlab
