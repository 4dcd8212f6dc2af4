#include "gaussbp/generate.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "gaussbp/error.hpp"
#include "gaussbp/oracle.hpp"

namespace gaussbp {
namespace {

constexpr std::string_view kNames[] = {"chain", "cycle", "grid", "tree", "random_dominant"};

GaussianModel structured(std::size_t n, double coupling,
                         const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  std::vector<NodeSpec> nodes;
  for (std::size_t k = 0; k < n; ++k) nodes.push_back({static_cast<NodeId>(k), 1.0, 1.0});
  std::vector<EdgeSpec> edges;
  for (auto [a, b] : pairs) {
    edges.push_back({static_cast<NodeId>(a), static_cast<NodeId>(b), coupling});
  }
  GaussianModel model(std::move(nodes), std::move(edges));
  if (!is_positive_definite(precision_matrix(model).precision)) {
    throw Error(ErrorCode::NotPositiveDefinite,
                "coupling " + std::to_string(coupling) + " gives a non-SPD model");
  }
  return model;
}

GaussianModel dominant(std::size_t n, double coupling, UniformSource& rng,
                       const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  std::vector<EdgeSpec> edges;
  std::vector<double> row_sum(n, 0.0);
  for (auto [a, b] : pairs) {
    const double j = rng.between(-coupling, coupling);
    edges.push_back({static_cast<NodeId>(a), static_cast<NodeId>(b), j});
    row_sum[a] += std::abs(j);
    row_sum[b] += std::abs(j);
  }
  std::vector<NodeSpec> nodes;
  for (std::size_t k = 0; k < n; ++k) {
    const double mu = rng.between(-1.0, 1.0);
    nodes.push_back({static_cast<NodeId>(k), mu, 1.0 / (row_sum[k] + 1.0)});
  }
  return GaussianModel(std::move(nodes), std::move(edges));
}

}  // namespace

UniformSource::UniformSource(std::uint64_t seed) : state_(seed) {}

double UniformSource::next() {
  // splitmix64
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

std::size_t UniformSource::index(std::size_t bound) {
  return std::min(bound - 1, static_cast<std::size_t>(next() * static_cast<double>(bound)));
}

std::optional<ModelKind> parse_model_kind(std::string_view text) {
  for (std::size_t k = 0; k < std::size(kNames); ++k) {
    if (kNames[k] == text) return static_cast<ModelKind>(k);
  }
  return std::nullopt;
}

std::string_view to_string(ModelKind kind) { return kNames[static_cast<std::size_t>(kind)]; }

GaussianModel generate_model(const GenerateSpec& spec) {
  const std::size_t n = spec.n;
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "n must be at least 1");
  if (!(spec.coupling >= 0.0) || !std::isfinite(spec.coupling)) {
    throw Error(ErrorCode::InvalidArgument, "coupling must be finite and non-negative");
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  UniformSource rng(spec.seed);
  switch (spec.kind) {
    case ModelKind::chain:
      for (std::size_t k = 0; k + 1 < n; ++k) pairs.emplace_back(k, k + 1);
      return structured(n, spec.coupling, pairs);
    case ModelKind::cycle:
      if (n < 3) throw Error(ErrorCode::InvalidArgument, "a cycle needs n >= 3");
      for (std::size_t k = 0; k + 1 < n; ++k) pairs.emplace_back(k, k + 1);
      pairs.emplace_back(0, n - 1);
      return structured(n, spec.coupling, pairs);
    case ModelKind::grid: {
      const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
      if (side * side != n) {
        throw Error(ErrorCode::InvalidArgument, "grid size must be a perfect square");
      }
      for (std::size_t r = 0; r < side; ++r) {
        for (std::size_t c = 0; c < side; ++c) {
          const std::size_t k = r * side + c;
          if (c + 1 < side) pairs.emplace_back(k, k + 1);
          if (r + 1 < side) pairs.emplace_back(k, k + side);
        }
      }
      return structured(n, spec.coupling, pairs);
    }
    case ModelKind::tree:
      for (std::size_t k = 1; k < n; ++k) pairs.emplace_back(rng.index(k), k);
      return dominant(n, spec.coupling, rng, pairs);
    case ModelKind::random_dominant: {
      const double p = n > 1 ? std::min(1.0, 3.0 / static_cast<double>(n - 1)) : 0.0;
      for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
          if (rng.next() < p) pairs.emplace_back(a, b);
        }
      }
      return dominant(n, spec.coupling, rng, pairs);
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown model kind");
}

}  // namespace gaussbp
