#include "gaussbp/cavity_cov.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "detail/sweep.hpp"
#include "gaussbp/error.hpp"
#include "gaussbp/gabp.hpp"
#include "gaussbp/parallel.hpp"

namespace gaussbp {
namespace {

// Dense index of `k` in the model with `removed` deleted.
std::size_t cavity_index(std::size_t k, std::size_t removed) {
  return k > removed ? k - 1 : k;
}

void require_converged(const BpResult& run, const char* what) {
  if (!run.report.converged) {
    throw Error(ErrorCode::NonConvergence, std::string(what) + " did not converge");
  }
}

std::string id_text(NodeId id) { return "node " + std::to_string(id); }

// Message derivatives with respect to mu of `source` on a converged cavity
// run; returns d m_j / d mu_source for every node j of the cavity graph.
Eigen::VectorXd mean_response(const GaussianModel& cavity, const BpResult& run,
                              std::size_t source, const Schedule& schedule,
                              RunReport& report) {
  std::vector<double> d(cavity.slot_count(), 0.0);
  auto drive = [&](std::size_t node) {
    return node == source ? 1.0 / cavity.node(node).s : 0.0;
  };
  bool converged = cavity.slot_count() == 0;
  int it = 0;
  double residual = 0.0;
  for (; it < schedule.max_iters && !converged; ++it) {
    residual = 0.0;
    for (std::size_t t :
         detail::sweep_order(cavity.slot_count(), schedule, static_cast<std::size_t>(it))) {
      const std::size_t l = cavity.source(t);
      const std::size_t j = cavity.target(t);
      double field = drive(l);
      for (std::size_t u = cavity.slot_begin(l); u < cavity.slot_end(l); ++u) {
        if (cavity.target(u) == j) continue;
        field += cavity.slot_coupling(u) * d[cavity.reverse(u)];
      }
      const double value =
          detail::damped(run.messages.var[t] * field, d[t], schedule.damping);
      residual = std::max(residual, std::abs(value - d[t]));
      d[t] = value;
    }
    converged = residual < schedule.tol;
  }
  report.iterations += it;
  report.residual = std::max(report.residual, residual);
  if (!converged) {
    throw Error(ErrorCode::NonConvergence, "response propagation did not converge");
  }
  Eigen::VectorXd dm(static_cast<Eigen::Index>(cavity.size()));
  for (std::size_t j = 0; j < cavity.size(); ++j) {
    double field = drive(j);
    for (std::size_t u = cavity.slot_begin(j); u < cavity.slot_end(j); ++u) {
      field += cavity.slot_coupling(u) * d[cavity.reverse(u)];
    }
    dm(static_cast<Eigen::Index>(j)) = run.marginals.var[j] * field;
  }
  return dm;
}

// kappa and v from runs whose mean of i is already non-degenerate.
void fill_kappa(const GaussianModel& model, std::size_t i, const BpResult& full,
                const BpResult& cavity, KappaU& out) {
  const double mi = full.marginals.mean[i];
  const auto nbrs = model.neighbors(i);
  out.kappa.resize(nbrs.size());
  double alpha = 0.0;
  for (std::size_t a = 0; a < nbrs.size(); ++a) {
    const std::size_t j = nbrs[a].index;
    const std::size_t in = model.slot(j, i);
    const double m_cav = cavity.marginals.mean[cavity_index(j, i)];
    out.kappa[a] = nbrs[a].coupling * full.messages.var[in] -
                   (m_cav - full.messages.mean[in]) / mi;
    alpha += nbrs[a].coupling * out.kappa[a];
  }
  const double s = model.node(i).s;
  const double precision = 1.0 - s * alpha;
  if (!(precision > 0.0)) {
    throw Error(ErrorCode::NotPositiveDefinite,
                "loop-corrected precision of " + id_text(model.id(i)) +
                    " is not positive");
  }
  out.variance = s / precision;
}

}  // namespace

double DegenerateMeanPolicy::threshold(const GaussianModel& model) const {
  double scale = 1.0;
  for (const NodeSpec& n : model.nodes()) scale = std::max(scale, std::abs(n.mu));
  return relative_threshold * scale;
}

ResponseResult response_propagation(const GaussianModel& model, NodeId i,
                                    const Schedule& schedule) {
  const GaussianModel cavity = remove_node(model, i);
  const BpResult run = run_gabp(cavity, schedule);
  return response_propagation(model, i, cavity, run, schedule);
}

ResponseResult response_propagation(const GaussianModel& model, NodeId i,
                                    const GaussianModel& cavity,
                                    const BpResult& cavity_run,
                                    const Schedule& schedule) {
  schedule.check();
  const std::size_t index = model.index_of(i);
  if (cavity.size() + 1 != model.size() || cavity.find(i)) {
    throw Error(ErrorCode::ShapeMismatch, "cavity model does not match " + id_text(i));
  }
  if (!cavity_run.report.converged) {
    throw Error(ErrorCode::CavityGraphNotConverged,
                "BP on the cavity graph of " + id_text(i) + " did not converge");
  }
  const auto nbrs = model.neighbors(index);
  const auto d = static_cast<Eigen::Index>(nbrs.size());
  ResponseResult out;
  out.derivatives = Eigen::MatrixXd::Zero(d, d);
  out.covariance = Eigen::MatrixXd::Zero(d, d);
  out.report.converged = true;
  for (const Neighbor& nb : nbrs) out.neighbors.push_back(model.id(nb.index));

  for (Eigen::Index b = 0; b < d; ++b) {
    const std::size_t source = cavity_index(nbrs[b].index, index);
    const Eigen::VectorXd dm = mean_response(cavity, cavity_run, source, schedule, out.report);
    for (Eigen::Index a = 0; a < d; ++a) {
      out.derivatives(a, b) = dm(static_cast<Eigen::Index>(cavity_index(nbrs[a].index, index)));
    }
  }
  for (Eigen::Index b = 0; b < d; ++b) {
    out.covariance.col(b) = out.derivatives.col(b) * model.node(nbrs[b].index).s;
  }
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  out.a_block = out.covariance;
  out.a_block.diagonal().setZero();
  return out;
}

CavityCovariance estimate_cavity_covariances(const GaussianModel& model,
                                             const Schedule& schedule,
                                             unsigned jobs) {
  CavityCovariance out = CavityCovariance::zeros(model);
  parallel_for(model.size(), jobs, [&](std::size_t i) {
    if (model.degree(i) < 2) return;
    out.blocks[i] = response_propagation(model, model.id(i), schedule).a_block;
  });
  return out;
}

KappaU kappa_u(const GaussianModel& model, NodeId i, const BpResult& full,
               const BpResult& cavity, const Schedule& schedule,
               const DegenerateMeanPolicy& policy) {
  const std::size_t index = model.index_of(i);
  if (full.marginals.size() != model.size() ||
      cavity.marginals.size() + 1 != model.size()) {
    throw Error(ErrorCode::ShapeMismatch,
                "BP runs do not match the model and its cavity graph");
  }
  require_converged(full, "BP on the full graph");
  require_converged(cavity, "BP on the cavity graph");

  KappaU out;
  out.node = i;
  out.mean = full.marginals.mean[index];
  const auto nbrs = model.neighbors(index);
  for (const Neighbor& nb : nbrs) out.neighbors.push_back(model.id(nb.index));

  const double threshold = policy.threshold(model);
  if (std::abs(out.mean) < threshold) {
    // Only mu_i moves; G \ {i} and its run are unaffected.
    std::vector<double> mu(model.size());
    for (std::size_t k = 0; k < model.size(); ++k) mu[k] = model.node(k).mu;
    mu[index] += policy.shift;
    const GaussianModel shifted = model.with_fields(mu);
    const BpResult rerun = run_gabp(shifted, schedule);
    require_converged(rerun, "BP on the field-shifted graph");
    if (std::abs(rerun.marginals.mean[index]) < threshold) {
      throw Error(ErrorCode::DegenerateMean,
                  "mean of " + id_text(i) + " stays degenerate after the field shift");
    }
    fill_kappa(shifted, index, rerun, cavity, out);
    out.field_shifted = true;
  } else {
    fill_kappa(model, index, full, cavity, out);
  }
  out.u.resize(nbrs.size());
  for (std::size_t a = 0; a < nbrs.size(); ++a) {
    out.u[a] = cavity.marginals.mean[cavity_index(nbrs[a].index, index)] +
               out.mean * out.kappa[a];
  }
  return out;
}

double lc_variance_via_cavity_bp(const GaussianModel& model, NodeId i,
                                 const BpResult& full, const BpResult& cavity,
                                 const Schedule& schedule,
                                 const DegenerateMeanPolicy& policy) {
  return kappa_u(model, i, full, cavity, schedule, policy).variance;
}

CovarianceEntries covariance_entries(const KappaU& ku,
                                     const Eigen::MatrixXd& cavity_covariance) {
  const auto d = static_cast<Eigen::Index>(ku.kappa.size());
  if (cavity_covariance.rows() != d || cavity_covariance.cols() != d) {
    throw Error(ErrorCode::ShapeMismatch,
                "cavity covariance must be " + std::to_string(d) + "x" +
                    std::to_string(d));
  }
  CovarianceEntries out;
  out.second_ii = ku.variance + ku.mean * ku.mean;
  out.second_ij.resize(ku.kappa.size());
  out.second_jk.resize(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    const auto sa = static_cast<std::size_t>(a);
    out.second_ij[sa] = ku.mean * ku.u[sa] + ku.variance * ku.kappa[sa];
    for (Eigen::Index b = 0; b < d; ++b) {
      const auto sb = static_cast<std::size_t>(b);
      out.second_jk(a, b) = ku.u[sa] * ku.u[sb] +
                            ku.variance * ku.kappa[sa] * ku.kappa[sb] +
                            cavity_covariance(a, b);
    }
  }
  return out;
}

std::vector<NodeId> growth_order(const GaussianModel& model, GrowthOrder order) {
  std::vector<std::size_t> idx(model.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (order == GrowthOrder::degree) {
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return model.degree(a) > model.degree(b);
    });
  }
  std::vector<NodeId> out;
  out.reserve(idx.size());
  for (std::size_t k : idx) out.push_back(model.id(k));
  return out;
}

CovarianceResult full_covariance_growing(const GaussianModel& model,
                                         std::span<const NodeId> order,
                                         const Schedule& schedule,
                                         const DegenerateMeanPolicy& policy) {
  schedule.check();
  const std::size_t n = model.size();
  std::vector<std::size_t> sequence;
  sequence.reserve(order.size());
  std::vector<bool> seen(n, false);
  for (NodeId id : order) {
    const auto k = model.find(id);
    if (!k || seen[*k]) {
      throw Error(ErrorCode::InvalidArgument,
                  "growth order must list every node exactly once");
    }
    seen[*k] = true;
    sequence.push_back(*k);
  }
  if (sequence.size() != n) {
    throw Error(ErrorCode::InvalidArgument,
                "growth order must list every node exactly once");
  }

  CovarianceResult out;
  out.covariance = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                         static_cast<Eigen::Index>(n));
  out.means = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  out.report.converged = true;
  if (n == 0) return out;

  const double threshold = policy.threshold(model);
  // Working fields: mu with per-node shifts applied where the predicted mean
  // would be degenerate.
  std::vector<double> mu_work(n);
  for (std::size_t k = 0; k < n; ++k) mu_work[k] = model.node(k).mu;
  // Means on the current prefix (working fields), global index.
  Eigen::VectorXd prefix_means = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  std::vector<bool> included(n, false);
  std::vector<std::size_t> members;

  const std::size_t first = sequence.front();
  const NodeSpec& root = model.node(first);
  GaussianModel prefix({root}, {});
  out.covariance(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(first)) = root.s;
  prefix_means(static_cast<Eigen::Index>(first)) = root.mu;
  included[first] = true;
  members.push_back(first);

  BpResult previous;
  previous.marginals.mean = {root.mu};
  previous.marginals.var = {root.s};
  previous.report.converged = true;

  DegenerateMeanPolicy never_shift = policy;
  never_shift.relative_threshold = 0.0;

  for (std::size_t step = 1; step < n; ++step) {
    const std::size_t g = sequence[step];
    const auto gg = static_cast<Eigen::Index>(g);
    const NodeSpec& node = model.node(g);

    std::vector<Attachment> attachments;
    std::vector<std::size_t> nbr_global;
    std::vector<double> nbr_coupling;
    for (const Neighbor& nb : model.neighbors(g)) {
      if (!included[nb.index]) continue;
      attachments.push_back({model.id(nb.index), nb.coupling});
      nbr_global.push_back(nb.index);
      nbr_coupling.push_back(nb.coupling);
    }

    // Predicted exact mean of g from the inherited covariance.
    double alpha = 0.0;
    double field_sum = 0.0;
    for (std::size_t a = 0; a < nbr_global.size(); ++a) {
      const auto ja = static_cast<Eigen::Index>(nbr_global[a]);
      field_sum += nbr_coupling[a] * prefix_means(ja);
      for (std::size_t b = 0; b < nbr_global.size(); ++b) {
        alpha += nbr_coupling[a] * nbr_coupling[b] *
                 out.covariance(ja, static_cast<Eigen::Index>(nbr_global[b]));
      }
    }
    const double precision = 1.0 - node.s * alpha;
    if (!(precision > 0.0)) {
      throw Error(ErrorCode::PrefixNotPositiveDefinite,
                  "prefix ending at " + id_text(node.id) + " is not positive definite");
    }
    const double predicted = node.s / precision * (mu_work[g] / node.s + field_sum);
    if (std::abs(predicted) < threshold) {
      mu_work[g] += policy.shift;
      ++out.field_shifts;
    }

    const GaussianModel grown =
        attach_node(prefix, NodeSpec{node.id, mu_work[g], node.s}, attachments);
    BpResult run = run_gabp(grown, schedule);
    ++out.bp_runs;
    out.report.iterations += run.report.iterations;
    out.report.residual = std::max(out.report.residual, run.report.residual);
    out.report.skipped_updates += run.report.skipped_updates;
    if (!run.report.converged) {
      throw Error(ErrorCode::NonConvergence,
                  "BP did not converge on the prefix ending at " + id_text(node.id));
    }

    const KappaU ku = kappa_u(grown, node.id, run, previous, schedule, never_shift);
    const double v = ku.variance;
    const double m = ku.mean;

    // g_l = [C^(g) J_g]_l: kappa on neighbours, mean shift elsewhere.
    Eigen::VectorXd response = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t l : members) {
      const auto ll = static_cast<Eigen::Index>(l);
      const double m_full = run.marginals.mean[grown.index_of(model.id(l))];
      response(ll) = (m_full - prefix_means(ll)) / m;
    }
    for (std::size_t a = 0; a < nbr_global.size(); ++a) {
      response(static_cast<Eigen::Index>(nbr_global[a])) = ku.kappa[a];
    }

    for (std::size_t j : members) {
      const auto jj = static_cast<Eigen::Index>(j);
      for (std::size_t k : members) {
        const auto kk = static_cast<Eigen::Index>(k);
        out.covariance(jj, kk) += v * response(jj) * response(kk);
      }
      out.covariance(gg, jj) = out.covariance(jj, gg) = v * response(jj);
    }
    out.covariance(gg, gg) = v;

    included[g] = true;
    members.push_back(g);
    for (std::size_t k = 0; k < grown.size(); ++k) {
      prefix_means(static_cast<Eigen::Index>(model.index_of(grown.id(k)))) =
          run.marginals.mean[k];
    }
    prefix = grown;
    previous = std::move(run);
    ++out.growth_steps;
  }

  Eigen::VectorXd field_shift = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    field_shift(static_cast<Eigen::Index>(k)) =
        (mu_work[k] - model.node(k).mu) / model.node(k).s;
  }
  out.means = prefix_means - out.covariance * field_shift;
  return out;
}

CovarianceResult full_covariance_cavity(const GaussianModel& model,
                                        const Schedule& schedule, unsigned jobs,
                                        const DegenerateMeanPolicy& policy) {
  schedule.check();
  const std::size_t n = model.size();
  const auto nn = static_cast<Eigen::Index>(n);
  CovarianceResult out;
  out.covariance = Eigen::MatrixXd::Zero(nn, nn);
  out.means = Eigen::VectorXd::Zero(nn);
  out.report.converged = true;
  if (n == 0) return out;

  const BpResult full = run_gabp(model, schedule);
  require_converged(full, "BP on the full graph");
  for (std::size_t k = 0; k < n; ++k) {
    out.means(static_cast<Eigen::Index>(k)) = full.marginals.mean[k];
  }
  const double threshold = policy.threshold(model);

  std::vector<RunReport> reports(n);
  std::vector<std::size_t> runs(n, 0);
  std::vector<char> shifted(n, 0);
  parallel_for(n, jobs, [&](std::size_t i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const NodeId id = model.id(i);
    const BpResult cavity = run_gabp(remove_node(model, id), schedule);
    runs[i] = 1;
    reports[i] = cavity.report;
    const KappaU ku = kappa_u(model, id, full, cavity, schedule, policy);
    out.covariance(ii, ii) = ku.variance;

    // The row needs full-graph means under the same fields as kappa used.
    const BpResult* source = &full;
    BpResult rerun;
    if (std::abs(full.marginals.mean[i]) < threshold) {
      std::vector<double> mu(n);
      for (std::size_t k = 0; k < n; ++k) mu[k] = model.node(k).mu;
      mu[i] += policy.shift;
      rerun = run_gabp(model.with_fields(mu), schedule);
      require_converged(rerun, "BP on the field-shifted graph");
      source = &rerun;
      runs[i] = 2;
      shifted[i] = 1;
    }
    const double m = source->marginals.mean[i];
    for (std::size_t l = 0; l < n; ++l) {
      if (l == i) continue;
      const double response =
          (source->marginals.mean[l] - cavity.marginals.mean[cavity_index(l, i)]) / m;
      out.covariance(ii, static_cast<Eigen::Index>(l)) = ku.variance * response;
    }
    const auto nbrs = model.neighbors(i);
    for (std::size_t a = 0; a < nbrs.size(); ++a) {
      out.covariance(ii, static_cast<Eigen::Index>(nbrs[a].index)) =
          ku.variance * ku.kappa[a];
    }
  });
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  out.bp_runs = 1;
  out.report.iterations = full.report.iterations;
  out.report.residual = full.report.residual;
  for (std::size_t i = 0; i < n; ++i) {
    out.bp_runs += runs[i];
    out.field_shifts += static_cast<std::size_t>(shifted[i]);
    out.report.iterations += reports[i].iterations;
    out.report.residual = std::max(out.report.residual, reports[i].residual);
  }
  return out;
}

}  // namespace gaussbp
