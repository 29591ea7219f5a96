#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "impactlab/order_book.hpp"
#include "impactlab/types.hpp"

namespace impactlab::flow {

/// Stateless counter-based uniform source: every draw is a pure function of
/// (seed, stream, counter), so streams replay without storing them.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t bits(std::uint64_t stream, std::uint64_t counter) const {
    // splitmix64 finalizer over the keyed counter
    std::uint64_t z = seed_ + 0x9E3779B97F4A7C15ull * (stream + 1);
    z ^= counter + 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform in the open interval (0, 1).
  double u01(std::uint64_t stream, std::uint64_t counter) const {
    return (static_cast<double>(bits(stream, counter) >> 11) + 0.5) *
           0x1.0p-53;
  }

 private:
  std::uint64_t seed_;
};

/// Pareto via inverse CDF: x = x_min * u^(-1/alpha), u in (0,1).
inline double pareto_icdf(double u, double alpha, double x_min) {
  return x_min * std::pow(u, -1.0 / alpha);
}

enum class LotRule : std::uint8_t { BuyLots100, None };

struct FlowConfig {
  std::uint64_t seed = 1;
  std::uint64_t n_events = 0;
  double p_cancel = 0.15;
  double p_buy = 0.5;
  double size_tail = 1.5;        // Pareto tail exponent of order sizes
  Qty size_min = 100;
  double placement_width = 3.0;  // ticks, geometric offset scale
  double marketable_fraction = 0.35;
  Ticks initial_mid = 1000;      // ticks
  LotRule lot_rule = LotRule::BuyLots100;
  std::int64_t ts_step_ns = 1'000'000;
  Seq first_seq = 1;
  OrderId first_order_id = 1;
};

using EventSink = std::function<void(const lob::OrderEvent&)>;

/// Emits a deterministic synthetic event stream with planted statistical
/// structure. Events are validated against an internally evolved book, so
/// every emitted event satisfies the stream invariants (live cancel targets,
/// lot rule, positive prices).
void generate(const FlowConfig& config, const EventSink& sink);

std::vector<lob::OrderEvent> generate(const FlowConfig& config);

/// Directly synthesizes (omega, r) pairs with r = A * omega^alpha and
/// omega ~ Pareto(size_tail, omega_min), plus optional bounded multiplicative
/// noise. By change of variables the return tail exponent is exactly
/// size_tail / alpha.
std::vector<std::pair<double, double>> generate_planted_impact(
    std::size_t n, double alpha, double prefactor, double size_tail,
    std::uint64_t seed, double noise = 0.0, double omega_min = 1.0);

}  // namespace impactlab::flow
