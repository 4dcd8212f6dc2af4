#pragma once

#include <cstddef>
#include <vector>

#include "gaussbp/messages.hpp"
#include "gaussbp/model.hpp"

namespace gaussbp {

/// Quadratic forms of the coupling vectors with the cavity covariance
/// D_i + A_i. Slot (i -> j) holds alpha_i^j and epsilon_j^i.
struct CavityAux {
  std::vector<double> alpha_excl;
  std::vector<double> eps;
  /// alpha_i, per node.
  std::vector<double> alpha;
};

/// Throws Error(ShapeMismatch) when A does not match the neighbourhoods.
CavityAux compute_aux(const GaussianModel& model, const MessageSet& messages,
                      const CavityCovariance& a);

/// One in-place sweep of the loop-corrected message updates
///   v_i^j = s_i/(1 - s_i alpha_i^j) - s_j/(1 - s_j alpha_j^i) (eps_j^i)^2
///   m_i^j = s_i/(1 - s_i alpha_i^j) (mu_i/s_i + sum_{l in ∂i\j} J_il m_l^i)
///         - s_j eps_j^i/(1 - s_j alpha_j^i) (mu_j/s_j + sum_{l in ∂j\i} J_jl m_l^j)
/// With A = 0 this performs exactly the floating-point operations of
/// gabp_step. Skip policy as in gabp_step.
StepStats lcbp_step(const GaussianModel& model, MessageSet& messages,
                    const CavityCovariance& a, const Schedule& schedule,
                    std::size_t sweep = 0);

/// v_i = s_i/(1 - s_i alpha_i), m_i = v_i (mu_i/s_i + sum_l J_il m_l^i).
MarginalSet lcbp_marginals(const GaussianModel& model, const MessageSet& messages,
                           const CavityCovariance& a);

BpResult run_lcbp(const GaussianModel& model, const CavityCovariance& a,
                  const Schedule& schedule = {});

/// Largest violation over slots of the variance consistency relation
///   v_i^j + s_j (eps_j^i)^2 / (1 - s_j alpha_j^i) = s_i / (1 - s_i alpha_i^j).
double variance_identity_violation(const GaussianModel& model,
                                   const MessageSet& messages,
                                   const CavityCovariance& a);

}  // namespace gaussbp
