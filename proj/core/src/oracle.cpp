#include "gaussbp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "gaussbp/error.hpp"

namespace gaussbp {

bool is_positive_definite(const Eigen::MatrixXd& symmetric) {
  if (symmetric.size() == 0) return true;
  Eigen::LLT<Eigen::MatrixXd> llt(symmetric);
  return llt.info() == Eigen::Success;
}

ExactSolution exact_gaussian(const GaussianModel& model) {
  const PrecisionForm form = precision_matrix(model);
  const auto n = form.precision.rows();
  if (n == 0) return {};
  Eigen::LLT<Eigen::MatrixXd> llt(form.precision);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite,
                "precision matrix is not positive definite");
  }
  ExactSolution out;
  out.means = llt.solve(form.field);
  Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(n, n));
  out.covariance = 0.5 * (cov + cov.transpose());
  return out;
}

Eigen::MatrixXd exact_cavity_block(const GaussianModel& model, std::size_t index) {
  const auto nbrs = model.neighbors(index);
  const auto d = static_cast<Eigen::Index>(nbrs.size());
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(d, d);
  if (d == 0) return block;
  const ExactSolution cavity = exact_gaussian(remove_node(model, model.id(index)));
  // Removing index shifts every later dense index down by one.
  auto cavity_index = [index](std::size_t k) {
    return static_cast<Eigen::Index>(k > index ? k - 1 : k);
  };
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b < d; ++b) {
      block(a, b) = cavity.covariance(cavity_index(nbrs[a].index),
                                      cavity_index(nbrs[b].index));
    }
  }
  return block;
}

CavityCovariance exact_cavity_covariances(const GaussianModel& model) {
  CavityCovariance out;
  out.blocks.reserve(model.size());
  for (std::size_t i = 0; i < model.size(); ++i) {
    Eigen::MatrixXd block = exact_cavity_block(model, i);
    block.diagonal().setZero();
    out.blocks.push_back(std::move(block));
  }
  return out;
}

namespace {

struct GridMoments {
  Eigen::VectorXd means;
  Eigen::MatrixXd covariance;
};

GridMoments integrate_grid(const PerturbedModel& model, const PrecisionForm& form,
                           const Eigen::VectorXd& center,
                           const Eigen::VectorXd& scale, double window,
                           std::size_t points) {
  const auto n = static_cast<std::size_t>(center.size());
  // Per-axis offsets from the center, trapezoid end weights and -V terms.
  std::vector<std::vector<double>> offset(n, std::vector<double>(points));
  std::vector<std::vector<double>> axis_log(n, std::vector<double>(points));
  std::vector<double> weight(points, 1.0);
  weight.front() = weight.back() = 0.5;
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    for (std::size_t k = 0; k < points; ++k) {
      const double t = -window + 2.0 * window * static_cast<double>(k) /
                                     static_cast<double>(points - 1);
      offset[i][k] = scale(ii) * t;
      axis_log[i][k] = -model.potential(i)(center(ii) + offset[i][k]);
    }
  }
  // With y = x - c and Lambda c = h the Gaussian exponent is -y'Lambda y / 2
  // up to a constant, so every term is <= 1 because V >= 0.
  const Eigen::MatrixXd& lambda = form.precision;

  std::vector<std::size_t> idx(n, 0);
  std::vector<double> y(n);
  double z = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                             static_cast<Eigen::Index>(n));
  for (;;) {
    double log_p = 0.0;
    double w = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = offset[i][idx[i]];
      log_p += axis_log[i][idx[i]];
      w *= weight[idx[i]];
    }
    double quad = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      double row = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        row += lambda(ii, static_cast<Eigen::Index>(j)) * y[j];
      }
      quad += y[i] * row;
    }
    const double p = w * std::exp(log_p - 0.5 * quad);
    z += p;
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      s1(ii) += p * y[i];
      for (std::size_t j = i; j < n; ++j) {
        s2(ii, static_cast<Eigen::Index>(j)) += p * y[i] * y[j];
      }
    }
    std::size_t axis = 0;
    while (axis < n && ++idx[axis] == points) idx[axis++] = 0;
    if (axis == n) break;
  }
  if (!(z > 0.0) || !std::isfinite(z)) {
    throw Error(ErrorCode::NonIntegrable, "density vanished on the grid");
  }
  GridMoments out;
  const Eigen::VectorXd d = s1 / z;
  out.means = center + d;
  out.covariance = s2.selfadjointView<Eigen::Upper>();
  out.covariance /= z;
  out.covariance -= d * d.transpose();
  return out;
}

}  // namespace

PerturbedSolution exact_perturbed(const PerturbedModel& model,
                                  const PerturbedOptions& options) {
  const GaussianModel& base = model.base();
  const std::size_t n = base.size();
  if (n > options.max_dim) {
    throw Error(ErrorCode::DimensionTooLarge,
                "grid oracle supports at most " +
                    std::to_string(options.max_dim) + " nodes, model has " +
                    std::to_string(n));
  }
  if (!validate(base).positive_definite) {
    throw Error(ErrorCode::NonIntegrable,
                "base Gaussian is not positive definite");
  }
  const ExactSolution gauss = exact_gaussian(base);
  PerturbedSolution out;
  if (n == 0) return out;
  if (model.is_gaussian()) {
    out.means = gauss.means;
    out.covariance = gauss.covariance;
    return out;
  }
  const PrecisionForm form = precision_matrix(base);
  const Eigen::VectorXd scale = gauss.covariance.diagonal().cwiseSqrt();

  std::size_t points = std::max<std::size_t>(options.initial_points, 3);
  GridMoments previous =
      integrate_grid(model, form, gauss.means, scale, options.window, points);
  for (;;) {
    const std::size_t next = 2 * points;
    double evaluations = 1.0;
    for (std::size_t i = 0; i < n; ++i) evaluations *= static_cast<double>(next);
    if (evaluations > static_cast<double>(options.max_evaluations)) {
      throw Error(ErrorCode::QuadratureNotConverged,
                  "grid oracle did not converge within the evaluation budget");
    }
    GridMoments current =
        integrate_grid(model, form, gauss.means, scale, options.window, next);
    double change = 0.0;
    for (Eigen::Index i = 0; i < scale.size(); ++i) {
      change = std::max(change,
                        std::abs(current.means(i) - previous.means(i)) / scale(i));
      for (Eigen::Index j = 0; j < scale.size(); ++j) {
        change = std::max(change, std::abs(current.covariance(i, j) -
                                           previous.covariance(i, j)) /
                                      (scale(i) * scale(j)));
      }
    }
    previous = std::move(current);
    points = next;
    if (change < options.rel_tol) break;
  }
  out.means = std::move(previous.means);
  out.covariance = std::move(previous.covariance);
  out.points_per_axis = points;
  return out;
}

}  // namespace gaussbp
