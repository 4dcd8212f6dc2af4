#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gaussbp {

enum class ErrorCode {
  InvalidModel,
  UnknownNode,
  DuplicateNode,
  DanglingNeighbor,
  ShapeMismatch,
  NotPositiveDefinite,
  DimensionTooLarge,
  NonIntegrable,
  QuadratureNotConverged,
  NonPositiveCavityVariance,
  NonConvergence,
  CavityGraphNotConverged,
  DegenerateMean,
  PrefixNotPositiveDefinite,
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-readable code; the CLI renders both as JSON.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gaussbp
