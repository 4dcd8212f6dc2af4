#include "gaussbp/lcbp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "detail/lc_terms.hpp"
#include "detail/sweep.hpp"
#include "gaussbp/gabp.hpp"

namespace gaussbp {

CavityAux compute_aux(const GaussianModel& model, const MessageSet& messages,
                      const CavityCovariance& a) {
  a.check(model);
  CavityAux aux;
  aux.alpha_excl.resize(model.slot_count());
  aux.eps.resize(model.slot_count());
  aux.alpha.resize(model.size());
  for (std::size_t i = 0; i < model.size(); ++i) {
    aux.alpha[i] =
        detail::alpha_excluding(model, messages, a.blocks[i], i, detail::kNone);
    for (std::size_t t = model.slot_begin(i); t < model.slot_end(i); ++t) {
      const std::size_t j = model.target(t);
      const std::size_t back = model.reverse(t);
      aux.alpha_excl[t] = detail::alpha_excluding(model, messages, a.blocks[i], i,
                                                  t - model.slot_begin(i));
      aux.eps[t] = detail::epsilon(model, a.blocks[j], j, back - model.slot_begin(j));
    }
  }
  return aux;
}

StepStats lcbp_step(const GaussianModel& model, MessageSet& messages,
                    const CavityCovariance& a, const Schedule& schedule,
                    std::size_t sweep) {
  a.check(model);
  StepStats stats;
  for (std::size_t t : detail::sweep_order(model.slot_count(), schedule, sweep)) {
    const std::size_t i = model.source(t);
    const std::size_t j = model.target(t);
    const std::size_t back = model.reverse(t);
    const std::size_t pos_j = t - model.slot_begin(i);
    const std::size_t pos_i = back - model.slot_begin(j);
    const NodeSpec& ni = model.node(i);

    const double alpha_i =
        detail::alpha_excluding(model, messages, a.blocks[i], i, pos_j);
    const double precision_i = 1.0 - ni.s * alpha_i;
    if (!(precision_i > 0.0)) {
      ++stats.skipped;
      continue;
    }
    const double vhat_i = ni.s / precision_i;
    double var = vhat_i;
    double mean = vhat_i * detail::cavity_field(model, messages, i, pos_j);

    const double eps = detail::epsilon(model, a.blocks[j], j, pos_i);
    if (eps != 0.0) {
      const NodeSpec& nj = model.node(j);
      const double alpha_j =
          detail::alpha_excluding(model, messages, a.blocks[j], j, pos_i);
      const double precision_j = 1.0 - nj.s * alpha_j;
      if (!(precision_j > 0.0)) {
        ++stats.skipped;
        continue;
      }
      const double vhat_j = nj.s / precision_j;
      var -= vhat_j * eps * eps;
      mean -= (vhat_j * eps) * detail::cavity_field(model, messages, j, pos_i);
    }

    const double new_var = detail::damped(var, messages.var[t], schedule.damping);
    const double new_mean = detail::damped(mean, messages.mean[t], schedule.damping);
    stats.residual = std::max({stats.residual, std::abs(new_var - messages.var[t]),
                               std::abs(new_mean - messages.mean[t])});
    messages.var[t] = new_var;
    messages.mean[t] = new_mean;
  }
  return stats;
}

MarginalSet lcbp_marginals(const GaussianModel& model, const MessageSet& messages,
                           const CavityCovariance& a) {
  a.check(model);
  MarginalSet out;
  out.mean.resize(model.size());
  out.var.resize(model.size());
  for (std::size_t i = 0; i < model.size(); ++i) {
    const NodeSpec& node = model.node(i);
    const double alpha =
        detail::alpha_excluding(model, messages, a.blocks[i], i, detail::kNone);
    const double precision = 1.0 - node.s * alpha;
    if (precision > 0.0) {
      out.var[i] = node.s / precision;
      out.mean[i] = out.var[i] * detail::cavity_field(model, messages, i, detail::kNone);
    } else {
      out.var[i] = out.mean[i] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

BpResult run_lcbp(const GaussianModel& model, const CavityCovariance& a,
                  const Schedule& schedule) {
  schedule.check();
  a.check(model);
  BpResult out;
  out.messages = init_messages(model);
  if (model.slot_count() == 0) out.report.converged = true;
  for (int it = 0; it < schedule.max_iters && !out.report.converged; ++it) {
    const StepStats step =
        lcbp_step(model, out.messages, a, schedule, static_cast<std::size_t>(it));
    out.report.iterations = it + 1;
    out.report.residual = step.residual;
    out.report.skipped_updates += step.skipped;
    out.report.converged = step.residual < schedule.tol && step.skipped == 0;
  }
  out.marginals = lcbp_marginals(model, out.messages, a);
  return out;
}

double variance_identity_violation(const GaussianModel& model,
                                   const MessageSet& messages,
                                   const CavityCovariance& a) {
  const CavityAux aux = compute_aux(model, messages, a);
  double worst = 0.0;
  for (std::size_t t = 0; t < model.slot_count(); ++t) {
    const std::size_t i = model.source(t);
    const std::size_t j = model.target(t);
    const double si = model.node(i).s;
    const double sj = model.node(j).s;
    const double alpha_j = aux.alpha_excl[model.reverse(t)];
    const double lhs =
        messages.var[t] + sj * aux.eps[t] * aux.eps[t] / (1.0 - sj * alpha_j);
    const double rhs = si / (1.0 - si * aux.alpha_excl[t]);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

}  // namespace gaussbp
