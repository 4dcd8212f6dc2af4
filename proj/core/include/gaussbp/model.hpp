#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gaussbp {

using NodeId = std::int64_t;

struct NodeSpec {
  NodeId id = 0;
  double mu = 0.0;
  double s = 1.0;

  friend bool operator==(const NodeSpec&, const NodeSpec&) = default;
};

/// Undirected coupling J_ij. Stored with i < j inside a model.
struct EdgeSpec {
  NodeId i = 0;
  NodeId j = 0;
  double coupling = 0.0;

  friend bool operator==(const EdgeSpec&, const EdgeSpec&) = default;
};

struct Neighbor {
  std::size_t index = 0;
  double coupling = 0.0;
};

/// Coupling from a node being attached to an existing node.
struct Attachment {
  NodeId neighbor = 0;
  double coupling = 0.0;
};

/// Pairwise Gaussian model
///   P(x) ∝ prod_i exp(-(x_i - mu_i)^2 / (2 s_i)) prod_{j<k} exp(J_jk x_j x_k).
///
/// Nodes are kept sorted by id and addressed internally by a dense index
/// 0..size()-1 in that order, so neighbourhoods sorted by index are also
/// sorted by id. Every undirected edge yields two directed "slots"; the slot
/// for (a -> b) lives in a's adjacency range and holds quantities sent from a
/// to b (m_a^b, v_a^b). Slots are ordered by (source, target).
///
/// Immutable once built; surgery returns a new model.
class GaussianModel {
 public:
  GaussianModel() = default;
  GaussianModel(std::vector<NodeSpec> nodes, std::vector<EdgeSpec> edges);

  std::size_t size() const noexcept { return nodes_.size(); }
  bool empty() const noexcept { return nodes_.empty(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  std::size_t slot_count() const noexcept { return targets_.size(); }

  const std::vector<NodeSpec>& nodes() const noexcept { return nodes_; }
  const std::vector<EdgeSpec>& edges() const noexcept { return edges_; }
  const NodeSpec& node(std::size_t index) const { return nodes_.at(index); }
  NodeId id(std::size_t index) const { return nodes_.at(index).id; }
  std::vector<NodeId> ids() const;

  std::optional<std::size_t> find(NodeId id) const noexcept;
  /// Throws Error(UnknownNode).
  std::size_t index_of(NodeId id) const;

  std::span<const Neighbor> neighbors(std::size_t index) const;
  std::size_t degree(std::size_t index) const {
    return offsets_[index + 1] - offsets_[index];
  }

  std::size_t slot_begin(std::size_t index) const { return offsets_[index]; }
  std::size_t slot_end(std::size_t index) const { return offsets_[index + 1]; }
  /// Slot of (from -> to); throws Error(UnknownNode) when no edge joins them.
  std::size_t slot(std::size_t from, std::size_t to) const;
  std::optional<std::size_t> find_slot(std::size_t from, std::size_t to) const;
  std::size_t reverse(std::size_t slot) const { return reverse_[slot]; }
  std::size_t source(std::size_t slot) const { return sources_[slot]; }
  std::size_t target(std::size_t slot) const { return targets_[slot].index; }
  double slot_coupling(std::size_t slot) const { return targets_[slot].coupling; }
  /// J between two dense indices, 0 when not adjacent.
  double coupling(std::size_t a, std::size_t b) const;

  /// Same model with the node fields replaced (index order).
  GaussianModel with_fields(std::span<const double> mu) const;

  friend bool operator==(const GaussianModel& a, const GaussianModel& b) {
    return a.nodes_ == b.nodes_ && a.edges_ == b.edges_;
  }

 private:
  std::vector<NodeSpec> nodes_;
  std::vector<EdgeSpec> edges_;
  std::vector<std::size_t> offsets_{0};
  std::vector<Neighbor> targets_;
  std::vector<std::size_t> sources_;
  std::vector<std::size_t> reverse_;
};

/// Deletes node `id` and its incident edges. Throws Error(UnknownNode).
GaussianModel remove_node(const GaussianModel& model, NodeId id);

/// Adds a fresh node coupled to existing nodes. Throws Error(DuplicateNode)
/// or Error(DanglingNeighbor).
GaussianModel attach_node(const GaussianModel& model, const NodeSpec& node,
                          std::span<const Attachment> edges);

/// Lambda_ii = 1/s_i, Lambda_ij = -J_ij, h_i = mu_i / s_i (index order).
struct PrecisionForm {
  Eigen::MatrixXd precision;
  Eigen::VectorXd field;
};

PrecisionForm precision_matrix(const GaussianModel& model);

struct ValidationReport {
  bool symmetric = true;
  bool positive_variances = true;
  bool positive_definite = false;
  bool diagonally_dominant = false;
  std::vector<std::string> notes;
};

/// Diagnostics only; the SPD flag comes from the oracle's factorization.
ValidationReport validate(const GaussianModel& model);

class NonlinearPotential {
 public:
  enum class Kind { none, quartic, double_well };

  NonlinearPotential() = default;
  static NonlinearPotential none() { return {}; }
  /// V(x) = lambda x^4, lambda >= 0.
  static NonlinearPotential quartic(double lambda);
  /// V(x) = a (x^2 - b)^2, a >= 0.
  static NonlinearPotential double_well(double a, double b);

  Kind kind() const noexcept { return kind_; }
  bool is_none() const noexcept { return kind_ == Kind::none; }
  double lambda() const noexcept { return p0_; }
  double a() const noexcept { return p0_; }
  double b() const noexcept { return p1_; }

  double operator()(double x) const noexcept {
    switch (kind_) {
      case Kind::quartic: {
        const double x2 = x * x;
        return p0_ * x2 * x2;
      }
      case Kind::double_well: {
        const double d = x * x - p1_;
        return p0_ * d * d;
      }
      case Kind::none: break;
    }
    return 0.0;
  }

  friend bool operator==(const NonlinearPotential&,
                         const NonlinearPotential&) = default;

 private:
  NonlinearPotential(Kind kind, double p0, double p1)
      : kind_(kind), p0_(p0), p1_(p1) {}

  Kind kind_ = Kind::none;
  double p0_ = 0.0;
  double p1_ = 0.0;
};

/// Gaussian model with single-site factors exp(-V_i(x_i)).
class PerturbedModel {
 public:
  PerturbedModel() = default;
  explicit PerturbedModel(GaussianModel base,
                          std::map<NodeId, NonlinearPotential> potentials = {});

  const GaussianModel& base() const noexcept { return base_; }
  const std::map<NodeId, NonlinearPotential>& potentials() const noexcept {
    return potentials_;
  }
  /// Potential of a dense index (none when absent).
  const NonlinearPotential& potential(std::size_t index) const {
    return by_index_[index];
  }
  bool is_gaussian() const noexcept;

  friend bool operator==(const PerturbedModel& a, const PerturbedModel& b) {
    return a.base_ == b.base_ && a.potentials_ == b.potentials_;
  }

 private:
  GaussianModel base_;
  std::map<NodeId, NonlinearPotential> potentials_;
  std::vector<NonlinearPotential> by_index_;
};

}  // namespace gaussbp
