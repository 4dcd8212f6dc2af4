#include "gaussbp_cli/runner.hpp"

#include <chrono>

#include "gaussbp/ep.hpp"
#include "gaussbp/error.hpp"
#include "gaussbp/gabp.hpp"
#include "gaussbp/io.hpp"
#include "gaussbp/lcbp.hpp"
#include "gaussbp/oracle.hpp"
#include "gaussbp/parallel.hpp"

namespace gaussbp::cli {
namespace {

constexpr std::string_view kNames[] = {"gabp",           "lcbp",           "lc_variance",
                                       "covariance_grow", "covariance_cavity", "ep_full",
                                       "ep_lc",          "ep_alt"};

void fill_marginals(RunResult& r, const MarginalSet& m) {
  r.means = m.mean;
  r.variances = m.var;
}

void fill_covariance(RunResult& r, const Eigen::VectorXd& means, const Eigen::MatrixXd& cov) {
  r.means.assign(means.data(), means.data() + means.size());
  r.variances.resize(static_cast<std::size_t>(cov.rows()));
  for (Eigen::Index k = 0; k < cov.rows(); ++k) r.variances[static_cast<std::size_t>(k)] = cov(k, k);
  r.covariance = cov;
}

void require_gaussian(const PerturbedModel& model, Algorithm algorithm) {
  if (!model.is_gaussian()) {
    throw Error(ErrorCode::InvalidArgument,
                std::string(to_string(algorithm)) +
                    " needs a Gaussian model; use ep_full, ep_lc or ep_alt with potentials");
  }
}

RunResult lc_variance(const GaussianModel& g, const RunOptions& options) {
  RunResult r;
  const BpResult full = run_gabp(g, options.schedule);
  r.report = full.report;
  r.means = full.marginals.mean;
  if (!full.report.converged) {
    r.variances = full.marginals.var;
    return r;
  }
  std::vector<double> var(g.size());
  std::vector<char> shifted(g.size(), 0);
  std::vector<int> iterations(g.size(), 0);
  parallel_for(g.size(), options.jobs, [&](std::size_t i) {
    const BpResult cavity = run_gabp(remove_node(g, g.id(i)), options.schedule);
    iterations[i] = cavity.report.iterations;
    const KappaU ku = kappa_u(g, g.id(i), full, cavity, options.schedule);
    var[i] = ku.variance;
    shifted[i] = ku.field_shifted ? 1 : 0;
  });
  r.variances = std::move(var);
  double shifts = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    shifts += shifted[i];
    r.report.iterations += iterations[i];
  }
  r.stats["bp_runs"] = static_cast<double>(1 + g.size()) + shifts;
  r.stats["field_shifts"] = shifts;
  return r;
}

}  // namespace

std::optional<Algorithm> parse_algorithm(std::string_view name) {
  for (std::size_t k = 0; k < std::size(kNames); ++k) {
    if (kNames[k] == name) return static_cast<Algorithm>(k);
  }
  return std::nullopt;
}

std::string_view to_string(Algorithm algorithm) {
  return kNames[static_cast<std::size_t>(algorithm)];
}

std::vector<std::string> algorithm_names() {
  return {std::begin(kNames), std::end(kNames)};
}

bool produces_covariance(Algorithm algorithm) {
  return algorithm == Algorithm::covariance_grow || algorithm == Algorithm::covariance_cavity ||
         algorithm == Algorithm::ep_full;
}

CavityCovariance resolve_cavity_covariance(const GaussianModel& model,
                                           std::string_view source,
                                           const Schedule& schedule, unsigned jobs) {
  if (source == "response") return estimate_cavity_covariances(model, schedule, jobs);
  if (source == "exact-oracle") return exact_cavity_covariances(model);
  if (source == "zero") return CavityCovariance::zeros(model);
  if (source.starts_with("file:")) {
    return cavity_covariance_from_json(model, read_text_file(std::string(source.substr(5))));
  }
  throw Error(ErrorCode::InvalidArgument,
              "unknown cavity covariance source \"" + std::string(source) +
                  "\" (response, exact-oracle, zero, file:<path>)");
}

RunResult execute(const PerturbedModel& model, const RunOptions& options) {
  options.schedule.check();
  const GaussianModel& g = model.base();
  const auto start = std::chrono::steady_clock::now();
  RunResult r;
  switch (options.algorithm) {
    case Algorithm::gabp: {
      require_gaussian(model, options.algorithm);
      const BpResult bp = run_gabp(g, options.schedule);
      fill_marginals(r, bp.marginals);
      r.report = bp.report;
      break;
    }
    case Algorithm::lcbp: {
      require_gaussian(model, options.algorithm);
      if (options.estimate_a.empty()) {
        throw Error(ErrorCode::InvalidArgument,
                    "lcbp needs --estimate-A (response, exact-oracle, zero or file:<path>)");
      }
      const CavityCovariance a =
          resolve_cavity_covariance(g, options.estimate_a, options.schedule, options.jobs);
      const BpResult bp = run_lcbp(g, a, options.schedule);
      fill_marginals(r, bp.marginals);
      r.report = bp.report;
      break;
    }
    case Algorithm::lc_variance:
      require_gaussian(model, options.algorithm);
      r = lc_variance(g, options);
      break;
    case Algorithm::covariance_grow:
    case Algorithm::covariance_cavity: {
      require_gaussian(model, options.algorithm);
      CovarianceResult c;
      if (options.algorithm == Algorithm::covariance_grow) {
        const std::vector<NodeId> order = growth_order(g, options.order);
        c = full_covariance_growing(g, order, options.schedule);
      } else {
        c = full_covariance_cavity(g, options.schedule, options.jobs);
      }
      fill_covariance(r, c.means, c.covariance);
      r.report = c.report;
      r.stats["bp_runs"] = static_cast<double>(c.bp_runs);
      r.stats["growth_steps"] = static_cast<double>(c.growth_steps);
      r.stats["field_shifts"] = static_cast<double>(c.field_shifts);
      break;
    }
    case Algorithm::ep_full: {
      const EpResult ep = full_gaussian_ep(model, options.schedule);
      fill_covariance(r, ep.means, ep.covariance);
      r.sites = ep.sites;
      r.report = ep.report;
      break;
    }
    case Algorithm::ep_lc:
    case Algorithm::ep_alt: {
      const CavityCovariance a = resolve_cavity_covariance(
          g, options.estimate_a.empty() ? "response" : options.estimate_a, options.schedule,
          options.jobs);
      const LcEpResult ep = run_lc_ep(
          model, a,
          options.algorithm == Algorithm::ep_lc ? LcEpVariant::standard : LcEpVariant::alternative,
          options.schedule);
      fill_marginals(r, ep.marginals);
      r.report = ep.report;
      break;
    }
  }
  r.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  r.algorithm = std::string(to_string(options.algorithm));
  r.ids = g.ids();
  return r;
}

}  // namespace gaussbp::cli
