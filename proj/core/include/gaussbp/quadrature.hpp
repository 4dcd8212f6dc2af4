#pragma once

#include <cstddef>
#include <vector>

namespace gaussbp {

/// Gauss–Hermite rule for the weight e^{-t^2} on the real line. Weights are
/// stored as logarithms because the outer ones underflow at high order.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> log_weights;

  std::size_t order() const noexcept { return nodes.size(); }
};

/// Rule of the given order (>= 1), computed once and cached. Thread-safe.
/// Throws Error(InvalidArgument) for order 0.
const GaussHermiteRule& gauss_hermite(std::size_t order);

}  // namespace gaussbp
