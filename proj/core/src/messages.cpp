#include "gaussbp/messages.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gaussbp/error.hpp"

namespace gaussbp {

void Schedule::check() const {
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be > 0");
  if (!(damping >= 0.0 && damping < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "damping must lie in [0, 1)");
  }
  if (max_iters < 1) {
    throw Error(ErrorCode::InvalidArgument, "max_iters must be >= 1");
  }
}

CavityCovariance CavityCovariance::zeros(const GaussianModel& model) {
  CavityCovariance out;
  out.blocks.reserve(model.size());
  for (std::size_t i = 0; i < model.size(); ++i) {
    const auto d = static_cast<Eigen::Index>(model.degree(i));
    out.blocks.push_back(Eigen::MatrixXd::Zero(d, d));
  }
  return out;
}

void CavityCovariance::check(const GaussianModel& model) const {
  if (blocks.size() != model.size()) {
    throw Error(ErrorCode::ShapeMismatch,
                "cavity covariance has " + std::to_string(blocks.size()) +
                    " blocks for a model of " + std::to_string(model.size()) +
                    " nodes");
  }
  for (std::size_t i = 0; i < model.size(); ++i) {
    const auto d = static_cast<Eigen::Index>(model.degree(i));
    if (blocks[i].rows() != d || blocks[i].cols() != d) {
      throw Error(ErrorCode::ShapeMismatch,
                  "cavity covariance of node " + std::to_string(model.id(i)) +
                      " must be " + std::to_string(d) + "x" + std::to_string(d));
    }
  }
}

bool CavityCovariance::is_zero() const {
  return std::all_of(blocks.begin(), blocks.end(), [](const Eigen::MatrixXd& b) {
    return b.size() == 0 || b.cwiseAbs().maxCoeff() == 0.0;
  });
}

}  // namespace gaussbp
