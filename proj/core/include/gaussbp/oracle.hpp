#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "gaussbp/messages.hpp"
#include "gaussbp/model.hpp"

namespace gaussbp {

/// Ground-truth moments, dense index order.
struct ExactSolution {
  Eigen::VectorXd means;
  Eigen::MatrixXd covariance;

  Eigen::VectorXd variances() const { return covariance.diagonal(); }
};

/// Cholesky test on a symmetric matrix. Empty matrices count as SPD.
bool is_positive_definite(const Eigen::MatrixXd& symmetric);

/// Means Lambda^-1 h and covariance Lambda^-1 by dense Cholesky.
/// Throws Error(NotPositiveDefinite).
ExactSolution exact_gaussian(const GaussianModel& model);

/// Full covariance of ∂i on G \ {i} (diagonal included), neighbour order.
Eigen::MatrixXd exact_cavity_block(const GaussianModel& model, std::size_t index);

/// A_i for every node: exact_cavity_block with the diagonal zeroed.
CavityCovariance exact_cavity_covariances(const GaussianModel& model);

struct PerturbedOptions {
  std::size_t max_dim = 4;
  double rel_tol = 1e-8;
  /// Half-width of the integration box in base-model standard deviations.
  double window = 10.0;
  std::size_t initial_points = 16;
  /// Refinement stops with QuadratureNotConverged beyond this many
  /// evaluations per grid.
  std::size_t max_evaluations = std::size_t{1} << 26;
};

struct PerturbedSolution : ExactSolution {
  std::size_t points_per_axis = 0;
};

/// Moments of prod_i psi_i e^{-V_i} prod psi_jk by trapezoid quadrature on a
/// tensor grid, doubled until successive estimates agree to rel_tol (measured
/// in units of the base-model standard deviations).
/// Throws Error(DimensionTooLarge), Error(NonIntegrable) or
/// Error(QuadratureNotConverged).
PerturbedSolution exact_perturbed(const PerturbedModel& model,
                                  const PerturbedOptions& options = {});

}  // namespace gaussbp
