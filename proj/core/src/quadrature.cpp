#include "gaussbp/quadrature.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include <Eigen/Dense>

#include "gaussbp/error.hpp"

namespace gaussbp {
namespace {

struct HermiteFunctions {
  double psi_n = 0.0;
  double psi_n1 = 0.0;
  double log_sum_squares = 0.0;
};

// Normalized Hermite functions psi_k(t) = p_k(t) e^{-t^2/2} for k < n, where
// p_k are orthonormal for e^{-t^2}. The values carry a common factor
// e^{log_scale} that is rescaled as needed, so only ratios of psi_n and
// psi_{n-1} are meaningful.
HermiteFunctions hermite_functions(std::size_t n, double t) {
  constexpr double kBig = 1e150;
  double log_scale = -0.5 * t * t;
  double prev = 0.0;
  double cur = 1.0 / std::pow(std::numbers::pi, 0.25);
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sum += cur * cur;
    const double next = std::sqrt(2.0 / static_cast<double>(k + 1)) * t * cur -
                        std::sqrt(static_cast<double>(k) / static_cast<double>(k + 1)) * prev;
    prev = cur;
    cur = next;
    if (std::abs(cur) > kBig) {
      cur /= kBig;
      prev /= kBig;
      sum /= kBig * kBig;
      log_scale += std::log(kBig);
    }
  }
  HermiteFunctions out;
  out.psi_n = cur;
  out.psi_n1 = prev;
  out.log_sum_squares = std::log(sum) + 2.0 * log_scale;
  return out;
}

GaussHermiteRule build_rule(std::size_t n) {
  // Golub–Welsch: eigenvalues of the Jacobi matrix, then Newton polish.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  Eigen::VectorXd sub(static_cast<Eigen::Index>(n > 0 ? n - 1 : 0));
  for (Eigen::Index k = 0; k < sub.size(); ++k) {
    sub(k) = std::sqrt(0.5 * static_cast<double>(k + 1));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);

  GaussHermiteRule rule;
  rule.nodes.resize(n);
  rule.log_weights.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    double t = solver.eigenvalues()(static_cast<Eigen::Index>(k));
    for (int it = 0; it < 3; ++it) {
      const HermiteFunctions h = hermite_functions(n, t);
      const double slope = std::sqrt(2.0 * static_cast<double>(n)) * h.psi_n1 - t * h.psi_n;
      if (slope == 0.0) break;
      t -= h.psi_n / slope;
    }
    rule.nodes[k] = t;
    rule.log_weights[k] = -t * t - hermite_functions(n, t).log_sum_squares;
  }
  return rule;
}

}  // namespace

const GaussHermiteRule& gauss_hermite(std::size_t order) {
  if (order == 0) {
    throw Error(ErrorCode::InvalidArgument, "Gauss-Hermite order must be positive");
  }
  static std::mutex mutex;
  static std::map<std::size_t, std::unique_ptr<GaussHermiteRule>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[order];
  if (!slot) slot = std::make_unique<GaussHermiteRule>(build_rule(order));
  return *slot;
}

}  // namespace gaussbp
