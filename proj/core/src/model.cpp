#include "gaussbp/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gaussbp/error.hpp"
#include "gaussbp/oracle.hpp"

namespace gaussbp {
namespace {

std::string node_label(NodeId id) { return "node " + std::to_string(id); }

}  // namespace

GaussianModel::GaussianModel(std::vector<NodeSpec> nodes,
                             std::vector<EdgeSpec> edges) {
  std::sort(nodes.begin(), nodes.end(),
            [](const NodeSpec& a, const NodeSpec& b) { return a.id < b.id; });
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const NodeSpec& n = nodes[k];
    if (n.id < 0) {
      throw Error(ErrorCode::InvalidModel, node_label(n.id) + ": negative id");
    }
    if (k > 0 && nodes[k - 1].id == n.id) {
      throw Error(ErrorCode::DuplicateNode, node_label(n.id) + " appears twice");
    }
    if (!std::isfinite(n.mu)) {
      throw Error(ErrorCode::InvalidModel, node_label(n.id) + ": mu not finite");
    }
    if (!(n.s > 0.0) || !std::isfinite(n.s)) {
      throw Error(ErrorCode::InvalidModel,
                  node_label(n.id) + ": s must be finite and > 0");
    }
  }
  nodes_ = std::move(nodes);

  for (EdgeSpec& e : edges) {
    if (e.i == e.j) {
      throw Error(ErrorCode::InvalidModel,
                  "self-loop on " + node_label(e.i));
    }
    if (e.i > e.j) std::swap(e.i, e.j);
    if (!find(e.i) || !find(e.j)) {
      throw Error(ErrorCode::DanglingNeighbor,
                  "edge (" + std::to_string(e.i) + ", " + std::to_string(e.j) +
                      ") references a missing node");
    }
    if (e.coupling == 0.0 || !std::isfinite(e.coupling)) {
      throw Error(ErrorCode::InvalidModel,
                  "edge (" + std::to_string(e.i) + ", " + std::to_string(e.j) +
                      ") must have a finite nonzero coupling");
    }
  }
  std::sort(edges.begin(), edges.end(), [](const EdgeSpec& a, const EdgeSpec& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  for (std::size_t k = 1; k < edges.size(); ++k) {
    if (edges[k - 1].i == edges[k].i && edges[k - 1].j == edges[k].j) {
      throw Error(ErrorCode::InvalidModel,
                  "duplicate edge (" + std::to_string(edges[k].i) + ", " +
                      std::to_string(edges[k].j) + ")");
    }
  }
  edges_ = std::move(edges);

  const std::size_t n = nodes_.size();
  std::vector<std::vector<Neighbor>> adjacency(n);
  for (const EdgeSpec& e : edges_) {
    const std::size_t a = *find(e.i);
    const std::size_t b = *find(e.j);
    adjacency[a].push_back({b, e.coupling});
    adjacency[b].push_back({a, e.coupling});
  }
  offsets_.assign(n + 1, 0);
  targets_.clear();
  sources_.clear();
  for (std::size_t a = 0; a < n; ++a) {
    auto& list = adjacency[a];
    std::sort(list.begin(), list.end(),
              [](const Neighbor& x, const Neighbor& y) { return x.index < y.index; });
    for (const Neighbor& nb : list) {
      targets_.push_back(nb);
      sources_.push_back(a);
    }
    offsets_[a + 1] = targets_.size();
  }
  reverse_.resize(targets_.size());
  for (std::size_t k = 0; k < targets_.size(); ++k) {
    reverse_[k] = *find_slot(targets_[k].index, sources_[k]);
  }
}

std::vector<NodeId> GaussianModel::ids() const {
  std::vector<NodeId> out;
  out.reserve(nodes_.size());
  for (const NodeSpec& n : nodes_) out.push_back(n.id);
  return out;
}

std::optional<std::size_t> GaussianModel::find(NodeId id) const noexcept {
  auto it = std::lower_bound(
      nodes_.begin(), nodes_.end(), id,
      [](const NodeSpec& n, NodeId value) { return n.id < value; });
  if (it == nodes_.end() || it->id != id) return std::nullopt;
  return static_cast<std::size_t>(it - nodes_.begin());
}

std::size_t GaussianModel::index_of(NodeId id) const {
  if (auto k = find(id)) return *k;
  throw Error(ErrorCode::UnknownNode, "unknown " + node_label(id));
}

std::span<const Neighbor> GaussianModel::neighbors(std::size_t index) const {
  return {targets_.data() + offsets_[index], offsets_[index + 1] - offsets_[index]};
}

std::optional<std::size_t> GaussianModel::find_slot(std::size_t from,
                                                    std::size_t to) const {
  if (from >= size()) return std::nullopt;
  auto first = targets_.begin() + static_cast<std::ptrdiff_t>(offsets_[from]);
  auto last = targets_.begin() + static_cast<std::ptrdiff_t>(offsets_[from + 1]);
  auto it = std::lower_bound(first, last, to, [](const Neighbor& n, std::size_t v) {
    return n.index < v;
  });
  if (it == last || it->index != to) return std::nullopt;
  return static_cast<std::size_t>(it - targets_.begin());
}

std::size_t GaussianModel::slot(std::size_t from, std::size_t to) const {
  if (auto k = find_slot(from, to)) return *k;
  throw Error(ErrorCode::UnknownNode, "no edge between indices " +
                                          std::to_string(from) + " and " +
                                          std::to_string(to));
}

double GaussianModel::coupling(std::size_t a, std::size_t b) const {
  if (auto k = find_slot(a, b)) return targets_[*k].coupling;
  return 0.0;
}

GaussianModel GaussianModel::with_fields(std::span<const double> mu) const {
  if (mu.size() != size()) {
    throw Error(ErrorCode::ShapeMismatch, "field vector has wrong length");
  }
  GaussianModel out = *this;
  for (std::size_t k = 0; k < mu.size(); ++k) out.nodes_[k].mu = mu[k];
  return out;
}

GaussianModel remove_node(const GaussianModel& model, NodeId id) {
  model.index_of(id);
  std::vector<NodeSpec> nodes;
  nodes.reserve(model.size() - 1);
  for (const NodeSpec& n : model.nodes()) {
    if (n.id != id) nodes.push_back(n);
  }
  std::vector<EdgeSpec> edges;
  for (const EdgeSpec& e : model.edges()) {
    if (e.i != id && e.j != id) edges.push_back(e);
  }
  return GaussianModel(std::move(nodes), std::move(edges));
}

GaussianModel attach_node(const GaussianModel& model, const NodeSpec& node,
                          std::span<const Attachment> edges) {
  if (model.find(node.id)) {
    throw Error(ErrorCode::DuplicateNode,
                node_label(node.id) + " already exists");
  }
  std::vector<NodeSpec> nodes = model.nodes();
  nodes.push_back(node);
  std::vector<EdgeSpec> all = model.edges();
  for (const Attachment& a : edges) {
    if (!model.find(a.neighbor)) {
      throw Error(ErrorCode::DanglingNeighbor,
                  "attachment to missing " + node_label(a.neighbor));
    }
    all.push_back({node.id, a.neighbor, a.coupling});
  }
  return GaussianModel(std::move(nodes), std::move(all));
}

PrecisionForm precision_matrix(const GaussianModel& model) {
  const auto n = static_cast<Eigen::Index>(model.size());
  PrecisionForm out{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    const NodeSpec& node = model.node(static_cast<std::size_t>(k));
    out.precision(k, k) = 1.0 / node.s;
    out.field(k) = node.mu / node.s;
  }
  for (const EdgeSpec& e : model.edges()) {
    const auto a = static_cast<Eigen::Index>(model.index_of(e.i));
    const auto b = static_cast<Eigen::Index>(model.index_of(e.j));
    out.precision(a, b) = -e.coupling;
    out.precision(b, a) = -e.coupling;
  }
  return out;
}

ValidationReport validate(const GaussianModel& model) {
  ValidationReport report;
  const PrecisionForm form = precision_matrix(model);
  report.symmetric = form.precision.isApprox(form.precision.transpose(), 0.0);
  report.positive_variances = std::all_of(
      model.nodes().begin(), model.nodes().end(),
      [](const NodeSpec& n) { return n.s > 0.0; });

  report.diagonally_dominant = true;
  for (std::size_t k = 0; k < model.size(); ++k) {
    double off = 0.0;
    for (const Neighbor& nb : model.neighbors(k)) off += std::abs(nb.coupling);
    if (!(1.0 / model.node(k).s > off)) {
      report.diagonally_dominant = false;
      std::ostringstream note;
      note << "node " << model.id(k) << " is not diagonally dominant (1/s = "
           << 1.0 / model.node(k).s << ", sum |J| = " << off << ")";
      report.notes.push_back(note.str());
    }
  }
  report.positive_definite = is_positive_definite(form.precision);
  if (!report.positive_definite) {
    report.notes.emplace_back("precision matrix is not positive definite");
  }
  return report;
}

NonlinearPotential NonlinearPotential::quartic(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::InvalidModel, "quartic potential needs lambda >= 0");
  }
  return {Kind::quartic, lambda, 0.0};
}

NonlinearPotential NonlinearPotential::double_well(double a, double b) {
  if (!(a >= 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw Error(ErrorCode::InvalidModel, "double-well potential needs a >= 0");
  }
  return {Kind::double_well, a, b};
}

PerturbedModel::PerturbedModel(GaussianModel base,
                               std::map<NodeId, NonlinearPotential> potentials)
    : base_(std::move(base)), potentials_(std::move(potentials)) {
  by_index_.assign(base_.size(), NonlinearPotential::none());
  for (const auto& [id, v] : potentials_) {
    auto k = base_.find(id);
    if (!k) {
      throw Error(ErrorCode::UnknownNode,
                  "potential on missing " + node_label(id));
    }
    by_index_[*k] = v;
  }
}

bool PerturbedModel::is_gaussian() const noexcept {
  return std::all_of(by_index_.begin(), by_index_.end(),
                     [](const NonlinearPotential& v) { return v.is_none(); });
}

}  // namespace gaussbp
