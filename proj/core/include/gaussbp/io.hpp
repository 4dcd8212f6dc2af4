#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "gaussbp/messages.hpp"
#include "gaussbp/model.hpp"

namespace gaussbp {

/// Canonical model file: {"nodes": [...], "edges": [...], "potentials": [...]}
/// with nodes sorted by id, edges by (i, j) and doubles printed to round-trip.
/// "potentials" is omitted when empty. Same model, same bytes.
std::string model_to_json(const PerturbedModel& model);

/// Throws Error(InvalidModel) on malformed input, plus the model's own
/// validation errors.
PerturbedModel model_from_json(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

PerturbedModel read_model_file(const std::filesystem::path& path);

/// [{"node": id, "neighbors": [ids], "A": [[row], ...]}, ...] for every node.
std::string cavity_covariance_to_json(const GaussianModel& model,
                                      const CavityCovariance& a);

/// Accepts nested rows or a flat row-major list for "A". Nodes without an
/// entry get a zero block; diagonals are ignored. Throws
/// Error(ShapeMismatch) when the neighbour list does not match the model.
CavityCovariance cavity_covariance_from_json(const GaussianModel& model,
                                             std::string_view text);

/// {"ids": [...], "matrix": [[row], ...]}.
std::string covariance_to_json(const GaussianModel& model, const Eigen::MatrixXd& c);
/// Header "id,<id0>,<id1>,...", then one row per node.
std::string covariance_to_csv(const GaussianModel& model, const Eigen::MatrixXd& c);

}  // namespace gaussbp
