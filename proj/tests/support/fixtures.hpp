#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gaussbp/error.hpp"
#include "gaussbp/generate.hpp"
#include "gaussbp/messages.hpp"
#include "gaussbp/model.hpp"

namespace fixtures {

using gaussbp::EdgeSpec;
using gaussbp::GaussianModel;
using gaussbp::NodeSpec;

inline GaussianModel chain3() {
  return GaussianModel({{1, 1.0, 1.0}, {2, 0.0, 1.0}, {3, 0.0, 1.0}},
                       {{1, 2, 0.25}, {2, 3, 0.25}});
}

inline GaussianModel triangle(double mu = 0.0) {
  return GaussianModel({{0, mu, 1.0}, {1, mu, 1.0}, {2, mu, 1.0}},
                       {{0, 1, 0.2}, {1, 2, 0.2}, {0, 2, 0.2}});
}

inline GaussianModel cycle4() {
  return gaussbp::generate_model({gaussbp::ModelKind::cycle, 4, 0.3, 0});
}

inline GaussianModel star3() {
  return GaussianModel({{0, 0.5, 1.2}, {1, 1.0, 0.8}, {2, -0.7, 1.5}},
                       {{0, 1, 0.4}, {0, 2, -0.3}});
}

inline GaussianModel six_cycle() {
  return GaussianModel({{0, 1.0, 1.0}, {1, -0.5, 1.0}, {2, 0.3, 1.0},
                        {3, 0.8, 1.0}, {4, -1.0, 1.0}, {5, 0.2, 1.0}},
                       {{0, 1, 0.3}, {1, 2, -0.25}, {2, 3, 0.2},
                        {3, 4, -0.3}, {4, 5, 0.35}, {0, 5, -0.15}});
}

inline GaussianModel random_dominant(std::size_t n, std::uint64_t seed, double coupling = 0.5) {
  return gaussbp::generate_model({gaussbp::ModelKind::random_dominant, n, coupling, seed});
}

inline GaussianModel tree(std::size_t n, std::uint64_t seed, double coupling = 0.5) {
  return gaussbp::generate_model({gaussbp::ModelKind::tree, n, coupling, seed});
}

inline GaussianModel zero_fields(const GaussianModel& model) {
  const std::vector<double> mu(model.size(), 0.0);
  return model.with_fields(mu);
}

inline gaussbp::Schedule tight() {
  gaussbp::Schedule s;
  s.tol = 1e-13;
  s.max_iters = 100000;
  return s;
}

inline double max_abs(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
  return worst;
}

inline double max_abs(std::span<const double> a, const Eigen::VectorXd& b) {
  return max_abs(a, std::span<const double>(b.data(), static_cast<std::size_t>(b.size())));
}

inline double max_abs(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.size() == 0) return 0.0;
  return (a - b).cwiseAbs().maxCoeff();
}

template <class Fn>
std::optional<gaussbp::ErrorCode> error_of(Fn&& fn) {
  try {
    fn();
  } catch (const gaussbp::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace fixtures
