#pragma once

#include <cstddef>

#include "gaussbp/messages.hpp"
#include "gaussbp/model.hpp"

namespace gaussbp {

/// m_i^j = mu_i, v_i^j = s_i on every slot (exact for zero couplings).
MessageSet init_messages(const GaussianModel& model);

/// One sweep of Gaussian BP over all slots, updated in place:
///   v_i^j = s_i / (1 - s_i sum_{k in ∂i\j} J_ik^2 v_k^i)
///   m_i^j = v_i^j (mu_i/s_i + sum_{k in ∂i\j} J_ik m_k^i)
/// Updates whose cavity precision 1 - s_i alpha is not positive keep the old
/// message and are counted in `skipped`. `sweep` seeds random orders.
StepStats gabp_step(const GaussianModel& model, MessageSet& messages,
                    const Schedule& schedule, std::size_t sweep = 0);

/// v_i = s_i / (1 - s_i sum_j J_ij^2 v_j^i), m_i = v_i (mu_i/s_i + sum_j J_ij m_j^i).
/// Nodes whose precision is not positive get NaN moments.
MarginalSet gabp_marginals(const GaussianModel& model, const MessageSet& messages);

/// Iterates gabp_step from init_messages until the residual drops below
/// schedule.tol. Non-convergence is reported, not thrown.
BpResult run_gabp(const GaussianModel& model, const Schedule& schedule = {});

}  // namespace gaussbp
