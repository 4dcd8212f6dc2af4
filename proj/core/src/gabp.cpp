#include "gaussbp/gabp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "detail/sweep.hpp"

namespace gaussbp {

MessageSet init_messages(const GaussianModel& model) {
  MessageSet out;
  out.mean.resize(model.slot_count());
  out.var.resize(model.slot_count());
  for (std::size_t t = 0; t < model.slot_count(); ++t) {
    const NodeSpec& node = model.node(model.source(t));
    out.mean[t] = node.mu;
    out.var[t] = node.s;
  }
  return out;
}

StepStats gabp_step(const GaussianModel& model, MessageSet& messages,
                    const Schedule& schedule, std::size_t sweep) {
  StepStats stats;
  for (std::size_t t : detail::sweep_order(model.slot_count(), schedule, sweep)) {
    const std::size_t i = model.source(t);
    const std::size_t j = model.target(t);
    const NodeSpec& node = model.node(i);
    double alpha = 0.0;
    double field = node.mu / node.s;
    for (std::size_t u = model.slot_begin(i); u < model.slot_end(i); ++u) {
      if (model.target(u) == j) continue;
      const double coupling = model.slot_coupling(u);
      const std::size_t in = model.reverse(u);
      alpha += coupling * (coupling * messages.var[in]);
      field += coupling * messages.mean[in];
    }
    const double precision = 1.0 - node.s * alpha;
    if (!(precision > 0.0)) {
      ++stats.skipped;
      continue;
    }
    const double var = node.s / precision;
    const double mean = var * field;
    const double new_var = detail::damped(var, messages.var[t], schedule.damping);
    const double new_mean = detail::damped(mean, messages.mean[t], schedule.damping);
    stats.residual = std::max({stats.residual, std::abs(new_var - messages.var[t]),
                               std::abs(new_mean - messages.mean[t])});
    messages.var[t] = new_var;
    messages.mean[t] = new_mean;
  }
  return stats;
}

MarginalSet gabp_marginals(const GaussianModel& model, const MessageSet& messages) {
  MarginalSet out;
  out.mean.resize(model.size());
  out.var.resize(model.size());
  for (std::size_t i = 0; i < model.size(); ++i) {
    const NodeSpec& node = model.node(i);
    double alpha = 0.0;
    double field = node.mu / node.s;
    for (std::size_t u = model.slot_begin(i); u < model.slot_end(i); ++u) {
      const double coupling = model.slot_coupling(u);
      const std::size_t in = model.reverse(u);
      alpha += coupling * (coupling * messages.var[in]);
      field += coupling * messages.mean[in];
    }
    const double precision = 1.0 - node.s * alpha;
    if (precision > 0.0) {
      out.var[i] = node.s / precision;
      out.mean[i] = out.var[i] * field;
    } else {
      out.var[i] = out.mean[i] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

BpResult run_gabp(const GaussianModel& model, const Schedule& schedule) {
  schedule.check();
  BpResult out;
  out.messages = init_messages(model);
  if (model.slot_count() == 0) {
    out.report.converged = true;
  }
  for (int it = 0; it < schedule.max_iters && !out.report.converged; ++it) {
    const StepStats step =
        gabp_step(model, out.messages, schedule, static_cast<std::size_t>(it));
    out.report.iterations = it + 1;
    out.report.residual = step.residual;
    out.report.skipped_updates += step.skipped;
    out.report.converged = step.residual < schedule.tol && step.skipped == 0;
  }
  out.marginals = gabp_marginals(model, out.messages);
  return out;
}

}  // namespace gaussbp
