#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "gaussbp/ep.hpp"
#include "gaussbp/messages.hpp"
#include "gaussbp/model.hpp"

namespace gaussbp::cli {

/// What `run` prints. Every node of the input model appears once, in id order.
struct RunResult {
  std::string algorithm;
  std::vector<NodeId> ids;
  std::vector<double> means;
  std::vector<double> variances;
  std::optional<Eigen::MatrixXd> covariance;
  /// Natural site parameters of full-Gaussian EP.
  std::optional<SiteApproximation> sites;
  RunReport report;
  double wall_ms = 0.0;
  /// Algorithm-specific counters (bp_runs, growth_steps, field_shifts, ...).
  std::map<std::string, double> stats;
};

/// Non-finite numbers are written as null and read back as NaN.
std::string to_json(const RunResult& result);
/// Throws Error(InvalidArgument) on malformed input.
RunResult run_result_from_json(std::string_view text);

/// Exact equality, NaN equal to NaN.
bool same_result(const RunResult& a, const RunResult& b);

}  // namespace gaussbp::cli
