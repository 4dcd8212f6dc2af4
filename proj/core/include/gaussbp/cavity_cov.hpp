#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gaussbp/messages.hpp"
#include "gaussbp/model.hpp"

namespace gaussbp {

/// When |m_i| falls below relative_threshold * max(1, max_j |mu_j|) the BP
/// mean is considered degenerate and mu_i is shifted by `shift` (covariance
/// quantities do not depend on the fields).
struct DegenerateMeanPolicy {
  double relative_threshold = 1e-2;
  double shift = 1.0;

  double threshold(const GaussianModel& model) const;
};

/// Linear-response estimate of the cavity covariance of ∂i on G \ {i}.
struct ResponseResult {
  std::vector<NodeId> neighbors;
  /// derivatives(a, b) = d m_a / d mu_b on the cavity graph, a, b in ∂i.
  Eigen::MatrixXd derivatives;
  /// s_b * derivatives(a, b), symmetrized; diagonal holds cavity variances.
  Eigen::MatrixXd covariance;
  /// Off-diagonal part of `covariance`: the A_i block.
  Eigen::MatrixXd a_block;
  RunReport report;
};

/// Runs BP on remove_node(model, i), then iterates the message-derivative
/// recursions
///   dm_l^j/dmu_k = v_l^j (delta_lk/s_l + sum_{n in ∂l\j} J_ln dm_n^l/dmu_k)
///   dm_j/dmu_k   = v_j (delta_jk/s_j + sum_{l in ∂j} J_jl dm_l^j/dmu_k)
/// for every source k in ∂i. Throws Error(CavityGraphNotConverged) or
/// Error(NonConvergence).
ResponseResult response_propagation(const GaussianModel& model, NodeId i,
                                    const Schedule& schedule = {});

/// Same, reusing a converged BP run on `cavity` = remove_node(model, i).
ResponseResult response_propagation(const GaussianModel& model, NodeId i,
                                    const GaussianModel& cavity,
                                    const BpResult& cavity_run,
                                    const Schedule& schedule = {});

/// A_i for every node by response propagation; `jobs` cavity graphs are
/// processed concurrently.
CavityCovariance estimate_cavity_covariances(const GaussianModel& model,
                                             const Schedule& schedule = {},
                                             unsigned jobs = 1);

/// Covariance quantities of node i from one BP run on G and one on G \ {i}.
struct KappaU {
  NodeId node = 0;
  std::vector<NodeId> neighbors;
  /// kappa_j^i = J_ij v_j^i - (m_j^(i) - m_j^i) / m_i = [(D_i + A_i) J_i]_j.
  std::vector<double> kappa;
  /// u_j^i = m_j^(i) + m_i kappa_j^i (the full-graph mean of j).
  std::vector<double> u;
  /// BP mean of i on the model as given (unshifted).
  double mean = 0.0;
  /// Loop-corrected variance s_i / (1 - s_i sum_j J_ij kappa_j^i).
  double variance = 0.0;
  /// True when mu_i had to be shifted to leave the degenerate-mean region.
  bool field_shifted = false;
};

/// `full` must be a converged run_gabp on `model`, `cavity` a converged run on
/// remove_node(model, i). A degenerate mean triggers one extra BP run on the
/// shifted model. Throws Error(NonConvergence) or Error(DegenerateMean).
KappaU kappa_u(const GaussianModel& model, NodeId i, const BpResult& full,
               const BpResult& cavity, const Schedule& schedule = {},
               const DegenerateMeanPolicy& policy = {});

/// v_i^LC; thin wrapper over kappa_u.
double lc_variance_via_cavity_bp(const GaussianModel& model, NodeId i,
                                 const BpResult& full, const BpResult& cavity,
                                 const Schedule& schedule = {},
                                 const DegenerateMeanPolicy& policy = {});

/// Second moments around node i rebuilt from kappa/u:
///   <x_i^2>     = v_i + m_i^2
///   <x_i x_j>   = m_i u_j + v_i kappa_j
///   <x_j x_k>   = u_j u_k + v_i kappa_j kappa_k + C^(i)_jk
/// where C^(i) is the covariance of ∂i on G \ {i}.
struct CovarianceEntries {
  double second_ii = 0.0;
  std::vector<double> second_ij;
  Eigen::MatrixXd second_jk;
};

CovarianceEntries covariance_entries(const KappaU& ku,
                                     const Eigen::MatrixXd& cavity_covariance);

enum class GrowthOrder { id, degree };

/// Attachment order: ascending id, or descending degree (ties by id).
std::vector<NodeId> growth_order(const GaussianModel& model, GrowthOrder order);

struct CovarianceResult {
  /// Dense index order of the input model.
  Eigen::MatrixXd covariance;
  Eigen::VectorXd means;
  std::size_t growth_steps = 0;
  std::size_t bp_runs = 0;
  std::size_t field_shifts = 0;
  /// Aggregated over BP runs: total iterations, worst residual.
  RunReport report;
};

/// Full covariance by attaching nodes one at a time in `order` and running
/// BP once per attachment. Throws Error(NonConvergence) at a prefix,
/// Error(PrefixNotPositiveDefinite) or Error(InvalidArgument) when `order`
/// is not a permutation of the node ids.
CovarianceResult full_covariance_growing(const GaussianModel& model,
                                         std::span<const NodeId> order,
                                         const Schedule& schedule = {},
                                         const DegenerateMeanPolicy& policy = {});

/// Full covariance from one BP run on G plus one independent run on every
/// cavity graph G \ {i} (row i = v_i (m - m^(i)) / m_i).
CovarianceResult full_covariance_cavity(const GaussianModel& model,
                                        const Schedule& schedule = {},
                                        unsigned jobs = 1,
                                        const DegenerateMeanPolicy& policy = {});

}  // namespace gaussbp
