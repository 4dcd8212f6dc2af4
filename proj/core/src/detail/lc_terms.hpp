#pragma once

#include <cstddef>
#include <limits>

#include "gaussbp/messages.hpp"
#include "gaussbp/model.hpp"

namespace gaussbp::detail {

inline constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

/// alpha_i^j = J_i^jT (D_i + A_i) J_i^j where D_i holds the incoming message
/// variances v_k^i and entry `excluded` (a position in ∂i) is zeroed.
/// excluded == kNone gives alpha_i. Summed as J_a (J_a v_a + sum_c A_ac J_c)
/// so that A = 0 reproduces the plain BP sum bit for bit.
inline double alpha_excluding(const GaussianModel& model, const MessageSet& messages,
                              const Eigen::MatrixXd& a_block, std::size_t i,
                              std::size_t excluded) {
  const std::size_t begin = model.slot_begin(i);
  const std::size_t deg = model.degree(i);
  double alpha = 0.0;
  for (std::size_t a = 0; a < deg; ++a) {
    if (a == excluded) continue;
    const double ja = model.slot_coupling(begin + a);
    double cross = 0.0;
    for (std::size_t c = 0; c < deg; ++c) {
      if (c == a || c == excluded) continue;
      cross += a_block(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)) *
               model.slot_coupling(begin + c);
    }
    alpha += ja * (ja * messages.var[model.reverse(begin + a)] + cross);
  }
  return alpha;
}

/// epsilon_j^i = [A_j J_j^i]_i with i at position `pos` of ∂j.
inline double epsilon(const GaussianModel& model, const Eigen::MatrixXd& a_block,
                      std::size_t j, std::size_t pos) {
  const std::size_t begin = model.slot_begin(j);
  double eps = 0.0;
  for (std::size_t c = 0; c < model.degree(j); ++c) {
    if (c == pos) continue;
    eps += a_block(static_cast<Eigen::Index>(pos), static_cast<Eigen::Index>(c)) *
           model.slot_coupling(begin + c);
  }
  return eps;
}

/// mu_i/s_i + sum_{k in ∂i, k at position != excluded} J_ik m_k^i.
inline double cavity_field(const GaussianModel& model, const MessageSet& messages,
                           std::size_t i, std::size_t excluded) {
  const NodeSpec& node = model.node(i);
  const std::size_t begin = model.slot_begin(i);
  double field = node.mu / node.s;
  for (std::size_t a = 0; a < model.degree(i); ++a) {
    if (a == excluded) continue;
    field += model.slot_coupling(begin + a) * messages.mean[model.reverse(begin + a)];
  }
  return field;
}

}  // namespace gaussbp::detail
