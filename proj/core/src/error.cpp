#include "gaussbp/error.hpp"

namespace gaussbp {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::DuplicateNode: return "DuplicateNode";
    case ErrorCode::DanglingNeighbor: return "DanglingNeighbor";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorCode::NonIntegrable: return "NonIntegrable";
    case ErrorCode::QuadratureNotConverged: return "QuadratureNotConverged";
    case ErrorCode::NonPositiveCavityVariance: return "NonPositiveCavityVariance";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::CavityGraphNotConverged: return "CavityGraphNotConverged";
    case ErrorCode::DegenerateMean: return "DegenerateMean";
    case ErrorCode::PrefixNotPositiveDefinite: return "PrefixNotPositiveDefinite";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace gaussbp
