#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "gaussbp/messages.hpp"
#include "gaussbp/model.hpp"

namespace gaussbp {

/// Zeroth to second moments of N(x; cavity_mean, cavity_var) e^{-V(x)}.
struct TiltedMoments {
  /// Normalizer relative to the cavity Gaussian, in (0, 1] for V >= 0.
  double z = 1.0;
  double log_z = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  /// Quadrature order that produced the moments (0 for the exact V = 0 path).
  std::size_t order = 0;
  /// True when the rule had to be recentred on the tilted density.
  bool recentered = false;
  /// Gaussian the rule was placed at (the cavity unless recentred).
  double frame_mean = 0.0;
  double frame_var = 0.0;
};

struct QuadratureOptions {
  std::size_t initial_order = 16;
  std::size_t max_order = 512;
  double rel_tol = 1e-10;
};

/// Gauss–Hermite moments at one fixed order, also for V = 0, with the rule
/// placed at N(frame_mean, frame_var). The plain overload uses the cavity.
/// Throws Error(NonPositiveCavityVariance) or Error(NonIntegrable).
TiltedMoments tilted_moments_at_order(double cavity_mean, double cavity_var,
                                      const NonlinearPotential& potential,
                                      std::size_t order);
TiltedMoments tilted_moments_at_order(double cavity_mean, double cavity_var,
                                      const NonlinearPotential& potential,
                                      std::size_t order, double frame_mean,
                                      double frame_var);

/// Doubles the order from initial_order until Z, mean and variance change by
/// less than rel_tol (mean measured against max(|mean|, sd)), with the rule
/// centred and scaled by the cavity. Tilts much narrower or wider than the
/// cavity may not settle by max_order; the search is then repeated with the
/// rule placed at the moment estimate so far, its variance shrunk 4x per
/// retry (up to three retries). V = 0 returns the cavity
/// moments exactly. Throws Error(NonPositiveCavityVariance) or
/// Error(QuadratureNotConverged).
TiltedMoments moment_match_1d(double cavity_mean, double cavity_var,
                              const NonlinearPotential& potential,
                              const QuadratureOptions& options = {});

/// Gaussian site terms in natural parameters: f^i(x) ∝ exp(-tau_i x^2/2 + nu_i x).
/// tau_i = 1/Sigma^i and nu_i = m^i/Sigma^i; tau_i may be negative.
struct SiteApproximation {
  std::vector<double> precision;
  std::vector<double> shift;

  static SiteApproximation neutral(std::size_t n);
  /// Sigma^i; infinite for a neutral site.
  double variance(std::size_t i) const;
  /// m^i; zero for a neutral site.
  double mean(std::size_t i) const;
};

struct EpOptions {
  QuadratureOptions quadrature;
  /// Sherman–Morrison update of Sigma instead of a fresh inversion per site.
  bool rank_one_updates = false;
  /// Step halvings tried when an update would break positive definiteness.
  int max_halvings = 8;
};

struct EpResult {
  Eigen::VectorXd means;
  Eigen::MatrixXd covariance;
  SiteApproximation sites;
  RunReport report;
};

/// Sigma = (Lambda_g + diag(tau))^-1, m = Sigma (h_g + nu).
/// Throws Error(NotPositiveDefinite).
EpResult assemble_ep_posterior(const GaussianModel& base, const SiteApproximation& sites);

/// Sequential site updates in node order: cavity by removing the site from the
/// marginal of q, 1D moment match, new site = tilted / cavity. Sites whose
/// cavity variance is not positive are skipped and counted. Converged when the
/// largest change in (tau, nu) over a sweep is below schedule.tol.
EpResult full_gaussian_ep(const PerturbedModel& model, const Schedule& schedule = {},
                          const EpOptions& options = {});

/// Messages plus the Gaussian parameters of the tilted densities
///   Phi_i^j(x) ∝ exp(-(x - mhat_i^j)^2 / (2 vhat_i^j) - V_i(x)).
struct LcEpState {
  MessageSet messages;
  std::vector<double> hat_mean;
  std::vector<double> hat_var;
  std::vector<double> node_hat_mean;
  std::vector<double> node_hat_var;
};

/// Messages at (mu_i, s_i), hatted parameters unset.
LcEpState init_lc_ep(const GaussianModel& model);

/// One in-place sweep of
///   m_i^j = <x>_{Phi_i^j} - eps_j^i <x>_{Phi_j^i}
///   v_i^j = <x^2>_{Phi_i^j} - <(m_i^j + eps_j^i x)^2>_{Phi_j^i}
/// With V = 0 this is lcbp_step; with A = 0 as well, gabp_step.
StepStats lc_ep_step(const PerturbedModel& model, LcEpState& state,
                     const CavityCovariance& a, const Schedule& schedule = {},
                     std::size_t sweep = 0, const QuadratureOptions& quadrature = {});

/// One in-place sweep of the alternative consistency equations with node
/// moments under Phi_i:
///   m_i^j = <x>_i - (J_ij v_i^j + eps_j^i) <x>_j
///   v_i^j = Var_i - (J_ij v_i^j + eps_j^i)^2 Var_j
/// The quadratic in v_i^j is solved for the root that tends to the linear
/// solution as J_ij -> 0; updates without a positive root are skipped.
StepStats alt_lc_ep_step(const PerturbedModel& model, LcEpState& state,
                         const CavityCovariance& a, const Schedule& schedule = {},
                         std::size_t sweep = 0, const QuadratureOptions& quadrature = {});

/// Moments of Phi_i for every node.
MarginalSet lc_ep_marginals(const PerturbedModel& model, const LcEpState& state,
                            const CavityCovariance& a,
                            const QuadratureOptions& quadrature = {});

enum class LcEpVariant { standard, alternative };

struct LcEpResult {
  LcEpState state;
  MarginalSet marginals;
  RunReport report;
};

LcEpResult run_lc_ep(const PerturbedModel& model, const CavityCovariance& a,
                     LcEpVariant variant = LcEpVariant::standard,
                     const Schedule& schedule = {},
                     const QuadratureOptions& quadrature = {});

}  // namespace gaussbp
