#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gaussbp/cavity_cov.hpp"
#include "gaussbp/messages.hpp"
#include "gaussbp/model.hpp"
#include "gaussbp_cli/run_result.hpp"

namespace gaussbp::cli {

enum class Algorithm {
  gabp,
  lcbp,
  lc_variance,
  covariance_grow,
  covariance_cavity,
  ep_full,
  ep_lc,
  ep_alt,
};

std::optional<Algorithm> parse_algorithm(std::string_view name);
std::string_view to_string(Algorithm algorithm);
std::vector<std::string> algorithm_names();
bool produces_covariance(Algorithm algorithm);

struct RunOptions {
  Algorithm algorithm = Algorithm::gabp;
  Schedule schedule;
  unsigned jobs = 1;
  /// "response", "exact-oracle", "zero" or "file:<path>"; empty means the
  /// algorithm default (required for lcbp, response for the EP variants).
  std::string estimate_a;
  GrowthOrder order = GrowthOrder::id;
};

/// Cavity covariances for `model` from one of the sources above.
/// Throws Error(InvalidArgument) for an unknown source.
CavityCovariance resolve_cavity_covariance(const GaussianModel& model,
                                           std::string_view source,
                                           const Schedule& schedule, unsigned jobs);

/// Runs one algorithm and times it. Gaussian-only algorithms reject models
/// with potentials. Errors propagate as gaussbp::Error.
RunResult execute(const PerturbedModel& model, const RunOptions& options);

}  // namespace gaussbp::cli
