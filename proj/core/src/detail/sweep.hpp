#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <random>
#include <vector>

#include "gaussbp/messages.hpp"

namespace gaussbp::detail {

/// Visiting order of `count` items for one sweep. Random orders are a pure
/// function of (seed, sweep) so runs are reproducible.
inline std::vector<std::size_t> sweep_order(std::size_t count,
                                            const Schedule& schedule,
                                            std::size_t sweep) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (schedule.order == SweepOrder::random_permutation) {
    std::seed_seq seq{static_cast<std::uint32_t>(schedule.seed),
                      static_cast<std::uint32_t>(schedule.seed >> 32),
                      static_cast<std::uint32_t>(sweep)};
    std::mt19937_64 rng(seq);
    std::shuffle(order.begin(), order.end(), rng);
  }
  return order;
}

inline double damped(double update, double old, double damping) {
  return damping == 0.0 ? update : (1.0 - damping) * update + damping * old;
}

}  // namespace gaussbp::detail
