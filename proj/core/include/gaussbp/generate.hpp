#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

#include "gaussbp/model.hpp"

namespace gaussbp {

enum class ModelKind { chain, cycle, grid, tree, random_dominant };

std::optional<ModelKind> parse_model_kind(std::string_view text);
std::string_view to_string(ModelKind kind);

struct GenerateSpec {
  ModelKind kind = ModelKind::chain;
  std::size_t n = 1;
  double coupling = 0.3;
  std::uint64_t seed = 0;
};

/// Node ids 0..n-1.
///   chain, cycle, grid: s = 1, mu = 1, every J = coupling (grid needs a
///     square n, cycle needs n >= 3).
///   tree: random recursive tree; random_dominant: each pair linked with
///     probability min(1, 3/(n-1)). Both draw J uniform in [-coupling,
///     coupling], mu uniform in [-1, 1] and set 1/s_i = sum_j |J_ij| + 1.
/// Output depends only on the spec. Throws Error(InvalidArgument) for bad
/// sizes and Error(NotPositiveDefinite) when a structured model is not SPD.
GaussianModel generate_model(const GenerateSpec& spec);

/// Uniform double in [0, 1) from 53 bits of a 64-bit draw; fixed across
/// standard library implementations, unlike std::uniform_real_distribution.
class UniformSource {
 public:
  explicit UniformSource(std::uint64_t seed);
  double next();
  double between(double lo, double hi) { return lo + (hi - lo) * next(); }
  /// Uniform integer in [0, bound), bound > 0.
  std::size_t index(std::size_t bound);

 private:
  std::uint64_t state_;
};

}  // namespace gaussbp
