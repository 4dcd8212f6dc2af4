#include "gaussbp/ep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "detail/lc_terms.hpp"
#include "detail/sweep.hpp"
#include "gaussbp/error.hpp"
#include "gaussbp/gabp.hpp"
#include "gaussbp/quadrature.hpp"

namespace gaussbp {
namespace {

void check_cavity(double mean, double var) {
  if (!(var > 0.0) || !std::isfinite(var) || !std::isfinite(mean)) {
    throw Error(ErrorCode::NonPositiveCavityVariance,
                "cavity variance must be positive and finite, got " + std::to_string(var));
  }
}

bool close(double a, double b, double scale, double tol) {
  return std::abs(a - b) <= tol * scale;
}

Eigen::MatrixXd invert_spd(const Eigen::MatrixXd& precision) {
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite, "EP precision is not positive definite");
  }
  const auto n = precision.rows();
  Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(n, n));
  return 0.5 * (cov + cov.transpose());
}

struct Hat {
  double mean = 0.0;
  double var = 0.0;
  bool ok = false;
};

// Gaussian part of Phi_i (excluded == kNone) or Phi_i^j.
Hat hat_params(const GaussianModel& model, const MessageSet& messages,
               const Eigen::MatrixXd& a_block, std::size_t i, std::size_t excluded) {
  const double s = model.node(i).s;
  const double precision =
      1.0 - s * detail::alpha_excluding(model, messages, a_block, i, excluded);
  Hat out;
  if (!(precision > 0.0)) return out;
  out.var = s / precision;
  out.mean = out.var * detail::cavity_field(model, messages, i, excluded);
  out.ok = true;
  return out;
}

void check_state(const GaussianModel& model, const LcEpState& state) {
  const std::size_t slots = model.slot_count();
  if (state.messages.mean.size() != slots || state.messages.var.size() != slots ||
      state.hat_mean.size() != slots || state.hat_var.size() != slots ||
      state.node_hat_mean.size() != model.size() ||
      state.node_hat_var.size() != model.size()) {
    throw Error(ErrorCode::ShapeMismatch, "LC-EP state does not match the model");
  }
}

void record(StepStats& stats, MessageSet& messages, std::size_t t, double mean,
            double var, double damping) {
  const double new_var = detail::damped(var, messages.var[t], damping);
  const double new_mean = detail::damped(mean, messages.mean[t], damping);
  stats.residual = std::max({stats.residual, std::abs(new_var - messages.var[t]),
                             std::abs(new_mean - messages.mean[t])});
  messages.var[t] = new_var;
  messages.mean[t] = new_mean;
}

// Positive root of b J^2 x^2 + (1 + 2 b J eps) x - (a - b eps^2) = 0 that
// tends to the linear solution as J -> 0; NaN when there is none.
double solve_alt_variance(double a, double b, double coupling, double eps) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double lin = 1.0 + 2.0 * b * coupling * eps;
  const double c = a - b * eps * eps;
  const double quad = b * coupling * coupling;
  double x = nan;
  if (quad == 0.0) {
    if (lin != 0.0) x = c / lin;
  } else {
    const double disc = lin * lin + 4.0 * quad * c;
    if (disc < 0.0) return nan;
    const double root = std::sqrt(disc);
    x = lin > 0.0 ? 2.0 * c / (lin + root) : (root - lin) / (2.0 * quad);
  }
  return x > 0.0 && std::isfinite(x) ? x : nan;
}

}  // namespace

TiltedMoments tilted_moments_at_order(double cavity_mean, double cavity_var,
                                      const NonlinearPotential& potential,
                                      std::size_t order) {
  return tilted_moments_at_order(cavity_mean, cavity_var, potential, order, cavity_mean,
                                 cavity_var);
}

TiltedMoments tilted_moments_at_order(double cavity_mean, double cavity_var,
                                      const NonlinearPotential& potential,
                                      std::size_t order, double frame_mean,
                                      double frame_var) {
  check_cavity(cavity_mean, cavity_var);
  check_cavity(frame_mean, frame_var);
  const GaussHermiteRule& rule = gauss_hermite(order);
  const double scale = std::sqrt(2.0 * frame_var);
  const bool same_frame = frame_mean == cavity_mean && frame_var == cavity_var;
  // log of sqrt(2 frame_var) / sqrt(2 pi cavity_var)
  const double log_jacobian = 0.5 * std::log(frame_var / (std::numbers::pi * cavity_var));
  std::vector<double> logp(order);
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < order; ++k) {
    const double t = rule.nodes[k];
    const double x = frame_mean + scale * t;
    double log_ratio = 0.0;
    if (!same_frame) {
      const double d = x - cavity_mean;
      log_ratio = t * t - d * d / (2.0 * cavity_var);
    }
    logp[k] = rule.log_weights[k] + log_ratio - potential(x);
    peak = std::max(peak, logp[k]);
  }
  if (!std::isfinite(peak)) {
    throw Error(ErrorCode::NonIntegrable, "tilted density vanishes on every node");
  }
  double total = 0.0;
  double first = 0.0;
  for (std::size_t k = 0; k < order; ++k) {
    logp[k] = std::exp(logp[k] - peak);
    total += logp[k];
    first += logp[k] * rule.nodes[k];
  }
  const double center = first / total;
  double second = 0.0;
  for (std::size_t k = 0; k < order; ++k) {
    const double d = rule.nodes[k] - center;
    second += logp[k] * d * d;
  }
  TiltedMoments out;
  out.log_z = peak + std::log(total) + log_jacobian;
  out.z = std::exp(out.log_z);
  out.mean = frame_mean + scale * center;
  out.variance = scale * scale * second / total;
  out.order = order;
  out.recentered = !same_frame;
  out.frame_mean = frame_mean;
  out.frame_var = frame_var;
  return out;
}

TiltedMoments moment_match_1d(double cavity_mean, double cavity_var,
                              const NonlinearPotential& potential,
                              const QuadratureOptions& options) {
  check_cavity(cavity_mean, cavity_var);
  if (potential.is_none()) {
    TiltedMoments out;
    out.mean = out.frame_mean = cavity_mean;
    out.variance = out.frame_var = cavity_var;
    return out;
  }
  if (options.initial_order == 0 || options.max_order < options.initial_order) {
    throw Error(ErrorCode::InvalidArgument, "invalid quadrature order range");
  }
  double frame_mean = cavity_mean;
  double frame_var = cavity_var;
  double estimate_var = cavity_var;
  for (int attempt = 0; attempt < 4; ++attempt) {
    TiltedMoments prev = tilted_moments_at_order(cavity_mean, cavity_var, potential,
                                                 options.initial_order, frame_mean, frame_var);
    for (std::size_t order = 2 * options.initial_order; order <= options.max_order;
         order *= 2) {
      const TiltedMoments cur = tilted_moments_at_order(cavity_mean, cavity_var, potential,
                                                        order, frame_mean, frame_var);
      const double sd = std::sqrt(cur.variance);
      if (cur.variance > 0.0 &&
          close(cur.log_z, prev.log_z, 1.0, options.rel_tol) &&
          close(cur.mean, prev.mean, std::max(std::abs(cur.mean), sd), options.rel_tol) &&
          close(cur.variance, prev.variance, cur.variance, options.rel_tol)) {
        return cur;
      }
      prev = cur;
    }
    if (!(prev.variance > 0.0) || !std::isfinite(prev.mean)) break;
    // Node density matters more than coverage here: narrower rules placed at
    // the current estimate settle at far lower orders.
    if (attempt == 0) estimate_var = prev.variance;
    frame_mean = prev.mean;
    frame_var = estimate_var / std::pow(4.0, attempt + 1);
  }
  throw Error(ErrorCode::QuadratureNotConverged,
              "Gauss-Hermite moments did not settle by order " +
                  std::to_string(options.max_order));
}

SiteApproximation SiteApproximation::neutral(std::size_t n) {
  return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
}

double SiteApproximation::variance(std::size_t i) const {
  return precision[i] == 0.0 ? std::numeric_limits<double>::infinity()
                             : 1.0 / precision[i];
}

double SiteApproximation::mean(std::size_t i) const {
  return precision[i] == 0.0 ? 0.0 : shift[i] / precision[i];
}

EpResult assemble_ep_posterior(const GaussianModel& base, const SiteApproximation& sites) {
  if (sites.precision.size() != base.size() || sites.shift.size() != base.size()) {
    throw Error(ErrorCode::ShapeMismatch, "site parameters do not match the model");
  }
  PrecisionForm pf = precision_matrix(base);
  for (std::size_t i = 0; i < base.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    pf.precision(ii, ii) += sites.precision[i];
    pf.field(ii) += sites.shift[i];
  }
  EpResult out;
  out.covariance = invert_spd(pf.precision);
  out.means = out.covariance * pf.field;
  out.sites = sites;
  return out;
}

EpResult full_gaussian_ep(const PerturbedModel& model, const Schedule& schedule,
                          const EpOptions& options) {
  schedule.check();
  const GaussianModel& base = model.base();
  const std::size_t n = base.size();
  const PrecisionForm pf = precision_matrix(base);

  EpResult state = assemble_ep_posterior(base, SiteApproximation::neutral(n));
  std::vector<std::size_t> sites;
  for (std::size_t i = 0; i < n; ++i) {
    if (!model.potential(i).is_none()) sites.push_back(i);
  }

  auto field = [&] {
    Eigen::VectorXd f = pf.field;
    for (std::size_t i = 0; i < n; ++i) f(static_cast<Eigen::Index>(i)) += state.sites.shift[i];
    return f;
  };
  auto precision = [&] {
    Eigen::MatrixXd p = pf.precision;
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      p(ii, ii) += state.sites.precision[i];
    }
    return p;
  };

  for (int it = 0; it < schedule.max_iters && !state.report.converged; ++it) {
    double residual = 0.0;
    std::size_t skipped = 0;
    for (std::size_t pick :
         detail::sweep_order(sites.size(), schedule, static_cast<std::size_t>(it))) {
      const std::size_t i = sites[pick];
      const auto ii = static_cast<Eigen::Index>(i);
      const double sii = state.covariance(ii, ii);
      const double tau = state.sites.precision[i];
      const double nu = state.sites.shift[i];

      const double cavity_precision = 1.0 / sii - tau;
      if (!(cavity_precision > 0.0)) {
        ++skipped;
        continue;
      }
      const double cavity_var = 1.0 / cavity_precision;
      const double cavity_mean = cavity_var * (state.means(ii) / sii - nu);
      const TiltedMoments tilted =
          moment_match_1d(cavity_mean, cavity_var, model.potential(i), options.quadrature);

      const double tau_target = detail::damped(
          1.0 / tilted.variance - cavity_precision, tau, schedule.damping);
      const double nu_target = detail::damped(
          tilted.mean / tilted.variance - cavity_mean * cavity_precision, nu,
          schedule.damping);

      bool accepted = false;
      double step = 1.0;
      for (int h = 0; h <= options.max_halvings && !accepted; ++h, step *= 0.5) {
        const double dtau = step * (tau_target - tau);
        const double dnu = step * (nu_target - nu);
        const double denom = 1.0 + dtau * sii;
        if (!(denom > 0.0)) continue;
        state.sites.precision[i] = tau + dtau;
        state.sites.shift[i] = nu + dnu;
        if (options.rank_one_updates) {
          const Eigen::VectorXd col = state.covariance.col(ii);
          state.covariance.noalias() -= (dtau / denom) * col * col.transpose();
        } else {
          try {
            state.covariance = invert_spd(precision());
          } catch (const Error&) {
            state.sites.precision[i] = tau;
            state.sites.shift[i] = nu;
            continue;
          }
        }
        state.means = state.covariance * field();
        residual = std::max({residual, std::abs(dtau), std::abs(dnu)});
        accepted = true;
      }
      if (!accepted) ++skipped;
    }
    state.report.iterations = it + 1;
    state.report.residual = residual;
    state.report.skipped_updates += skipped;
    state.report.converged = residual < schedule.tol && skipped == 0;
  }
  return state;
}

LcEpState init_lc_ep(const GaussianModel& model) {
  LcEpState state;
  state.messages = init_messages(model);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  state.hat_mean.assign(model.slot_count(), nan);
  state.hat_var.assign(model.slot_count(), nan);
  state.node_hat_mean.assign(model.size(), nan);
  state.node_hat_var.assign(model.size(), nan);
  return state;
}

StepStats lc_ep_step(const PerturbedModel& model, LcEpState& state,
                     const CavityCovariance& a, const Schedule& schedule,
                     std::size_t sweep, const QuadratureOptions& quadrature) {
  const GaussianModel& g = model.base();
  a.check(g);
  check_state(g, state);
  StepStats stats;
  MessageSet& msg = state.messages;
  for (std::size_t t : detail::sweep_order(g.slot_count(), schedule, sweep)) {
    const std::size_t i = g.source(t);
    const std::size_t j = g.target(t);
    const std::size_t back = g.reverse(t);
    const std::size_t pos_j = t - g.slot_begin(i);
    const std::size_t pos_i = back - g.slot_begin(j);

    const Hat hi = hat_params(g, msg, a.blocks[i], i, pos_j);
    if (!hi.ok) {
      ++stats.skipped;
      continue;
    }
    state.hat_mean[t] = hi.mean;
    state.hat_var[t] = hi.var;
    const TiltedMoments mi = moment_match_1d(hi.mean, hi.var, model.potential(i), quadrature);
    double var = mi.variance;
    double mean = mi.mean;

    const double eps = detail::epsilon(g, a.blocks[j], j, pos_i);
    if (eps != 0.0) {
      const Hat hj = hat_params(g, msg, a.blocks[j], j, pos_i);
      if (!hj.ok) {
        ++stats.skipped;
        continue;
      }
      state.hat_mean[back] = hj.mean;
      state.hat_var[back] = hj.var;
      const TiltedMoments mj =
          moment_match_1d(hj.mean, hj.var, model.potential(j), quadrature);
      // <x^2>_ij - <(m + eps y)^2>_ji with m = <x>_ij - eps <y>_ji.
      var -= mj.variance * eps * eps;
      mean -= eps * mj.mean;
    }
    if (!(var > 0.0)) {
      ++stats.skipped;
      continue;
    }
    record(stats, msg, t, mean, var, schedule.damping);
  }
  return stats;
}

StepStats alt_lc_ep_step(const PerturbedModel& model, LcEpState& state,
                         const CavityCovariance& a, const Schedule& schedule,
                         std::size_t sweep, const QuadratureOptions& quadrature) {
  const GaussianModel& g = model.base();
  a.check(g);
  check_state(g, state);
  StepStats stats;
  MessageSet& msg = state.messages;
  for (std::size_t t : detail::sweep_order(g.slot_count(), schedule, sweep)) {
    const std::size_t i = g.source(t);
    const std::size_t j = g.target(t);
    const std::size_t pos_i = g.reverse(t) - g.slot_begin(j);

    const Hat hi = hat_params(g, msg, a.blocks[i], i, detail::kNone);
    const Hat hj = hat_params(g, msg, a.blocks[j], j, detail::kNone);
    if (!hi.ok || !hj.ok) {
      ++stats.skipped;
      continue;
    }
    state.node_hat_mean[i] = hi.mean;
    state.node_hat_var[i] = hi.var;
    state.node_hat_mean[j] = hj.mean;
    state.node_hat_var[j] = hj.var;
    const TiltedMoments mi = moment_match_1d(hi.mean, hi.var, model.potential(i), quadrature);
    const TiltedMoments mj = moment_match_1d(hj.mean, hj.var, model.potential(j), quadrature);

    const double coupling = g.slot_coupling(t);
    const double eps = detail::epsilon(g, a.blocks[j], j, pos_i);
    const double var = solve_alt_variance(mi.variance, mj.variance, coupling, eps);
    if (std::isnan(var)) {
      ++stats.skipped;
      continue;
    }
    const double mean = mi.mean - (coupling * var + eps) * mj.mean;
    record(stats, msg, t, mean, var, schedule.damping);
  }
  return stats;
}

MarginalSet lc_ep_marginals(const PerturbedModel& model, const LcEpState& state,
                            const CavityCovariance& a,
                            const QuadratureOptions& quadrature) {
  const GaussianModel& g = model.base();
  a.check(g);
  check_state(g, state);
  MarginalSet out;
  out.mean.resize(g.size());
  out.var.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Hat h = hat_params(g, state.messages, a.blocks[i], i, detail::kNone);
    if (!h.ok) {
      out.mean[i] = out.var[i] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const TiltedMoments m = moment_match_1d(h.mean, h.var, model.potential(i), quadrature);
    out.mean[i] = m.mean;
    out.var[i] = m.variance;
  }
  return out;
}

LcEpResult run_lc_ep(const PerturbedModel& model, const CavityCovariance& a,
                     LcEpVariant variant, const Schedule& schedule,
                     const QuadratureOptions& quadrature) {
  schedule.check();
  const GaussianModel& g = model.base();
  a.check(g);
  LcEpResult out;
  out.state = init_lc_ep(g);
  if (g.slot_count() == 0) out.report.converged = true;
  for (int it = 0; it < schedule.max_iters && !out.report.converged; ++it) {
    const auto sweep = static_cast<std::size_t>(it);
    const StepStats step =
        variant == LcEpVariant::standard
            ? lc_ep_step(model, out.state, a, schedule, sweep, quadrature)
            : alt_lc_ep_step(model, out.state, a, schedule, sweep, quadrature);
    out.report.iterations = it + 1;
    out.report.residual = step.residual;
    out.report.skipped_updates += step.skipped;
    out.report.converged = step.residual < schedule.tol && step.skipped == 0;
  }
  out.marginals = lc_ep_marginals(model, out.state, a, quadrature);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Hat h = hat_params(g, out.state.messages, a.blocks[i], i, detail::kNone);
    out.state.node_hat_mean[i] = h.ok ? h.mean : std::numeric_limits<double>::quiet_NaN();
    out.state.node_hat_var[i] = h.ok ? h.var : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

}  // namespace gaussbp
