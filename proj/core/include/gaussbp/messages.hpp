#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "gaussbp/model.hpp"

namespace gaussbp {

enum class SweepOrder { sequential_fixed, random_permutation };

/// Iteration control shared by every fixed-point solver in the library.
struct Schedule {
  int max_iters = 10000;
  double tol = 1e-10;
  /// new = (1 - damping) * update + damping * old.
  double damping = 0.0;
  SweepOrder order = SweepOrder::sequential_fixed;
  std::uint64_t seed = 0;

  /// Throws Error(InvalidArgument) on tol <= 0, damping outside [0, 1) or
  /// max_iters < 1.
  void check() const;
};

struct RunReport {
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
  /// Updates skipped because a cavity precision went non-positive.
  std::size_t skipped_updates = 0;
};

struct StepStats {
  double residual = 0.0;
  std::size_t skipped = 0;
};

/// Directed messages (m_i^j, v_i^j) stored per slot of the owning model.
struct MessageSet {
  std::vector<double> mean;
  std::vector<double> var;

  std::size_t size() const noexcept { return mean.size(); }
};

/// Per-node marginal mean and variance, dense index order.
struct MarginalSet {
  std::vector<double> mean;
  std::vector<double> var;

  std::size_t size() const noexcept { return mean.size(); }
};

struct BpResult {
  MessageSet messages;
  MarginalSet marginals;
  RunReport report;
};

/// Off-diagonal cavity covariances A_i, one |∂i| x |∂i| block per node,
/// rows/columns in neighbour order (ascending id). Diagonals are zero; the
/// diagonal D_i lives in the incoming message variances.
struct CavityCovariance {
  std::vector<Eigen::MatrixXd> blocks;

  static CavityCovariance zeros(const GaussianModel& model);
  /// Throws Error(ShapeMismatch) when a block does not match |∂i|.
  void check(const GaussianModel& model) const;
  bool is_zero() const;
};

}  // namespace gaussbp
