#include "gaussbp/io.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "gaussbp/error.hpp"
#include "json.hpp"

namespace gaussbp {
namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void bad(const std::string& what) {
  throw Error(ErrorCode::InvalidModel, what);
}

json parse(std::string_view text, ErrorCode code) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(code, std::string("malformed JSON: ") + e.what());
  }
}

const json& field(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) bad(std::string("missing field \"") + key + "\"");
  return obj.at(key);
}

double number(const json& obj, const char* key) {
  const json& v = field(obj, key);
  if (!v.is_number()) bad(std::string("field \"") + key + "\" must be a number");
  return v.get<double>();
}

NodeId integer(const json& v, const char* what) {
  if (!v.is_number_integer()) bad(std::string(what) + " must be an integer");
  return v.get<NodeId>();
}

NonlinearPotential potential_from(const json& p) {
  const json& kind = field(p, "kind");
  if (!kind.is_string()) bad("potential kind must be a string");
  const auto name = kind.get<std::string>();
  if (name == "quartic") return NonlinearPotential::quartic(number(p, "lambda"));
  if (name == "double_well") {
    return NonlinearPotential::double_well(number(p, "a"), number(p, "b"));
  }
  if (name == "none") return NonlinearPotential::none();
  bad("unknown potential kind \"" + name + "\"");
}

json matrix_rows(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string model_to_json(const PerturbedModel& model) {
  const GaussianModel& g = model.base();
  json out;
  json nodes = json::array();
  for (const NodeSpec& n : g.nodes()) {
    nodes.push_back({{"id", n.id}, {"mu", n.mu}, {"s", n.s}});
  }
  json edges = json::array();
  for (const EdgeSpec& e : g.edges()) {
    edges.push_back({{"i", e.i}, {"j", e.j}, {"J", e.coupling}});
  }
  out["nodes"] = std::move(nodes);
  out["edges"] = std::move(edges);
  json potentials = json::array();
  for (const auto& [id, v] : model.potentials()) {
    switch (v.kind()) {
      case NonlinearPotential::Kind::quartic:
        potentials.push_back({{"id", id}, {"kind", "quartic"}, {"lambda", v.lambda()}});
        break;
      case NonlinearPotential::Kind::double_well:
        potentials.push_back({{"id", id}, {"kind", "double_well"}, {"a", v.a()}, {"b", v.b()}});
        break;
      case NonlinearPotential::Kind::none:
        break;
    }
  }
  if (!potentials.empty()) out["potentials"] = std::move(potentials);
  return out.dump(2) + "\n";
}

PerturbedModel model_from_json(std::string_view text) {
  const json doc = parse(text, ErrorCode::InvalidModel);
  if (!doc.is_object()) bad("model file must be a JSON object");
  const json& nodes = field(doc, "nodes");
  if (!nodes.is_array()) bad("\"nodes\" must be an array");
  std::vector<NodeSpec> node_specs;
  for (const json& n : nodes) {
    node_specs.push_back({integer(field(n, "id"), "node id"), number(n, "mu"), number(n, "s")});
  }
  std::vector<EdgeSpec> edge_specs;
  if (doc.contains("edges")) {
    const json& edges = doc.at("edges");
    if (!edges.is_array()) bad("\"edges\" must be an array");
    for (const json& e : edges) {
      edge_specs.push_back({integer(field(e, "i"), "edge endpoint"),
                            integer(field(e, "j"), "edge endpoint"), number(e, "J")});
    }
  }
  std::map<NodeId, NonlinearPotential> potentials;
  if (doc.contains("potentials")) {
    const json& list = doc.at("potentials");
    if (!list.is_array()) bad("\"potentials\" must be an array");
    for (const json& p : list) {
      const NodeId id = integer(field(p, "id"), "potential id");
      if (!potentials.emplace(id, potential_from(p)).second) {
        bad("node " + std::to_string(id) + " has more than one potential");
      }
    }
  }
  return PerturbedModel(GaussianModel(std::move(node_specs), std::move(edge_specs)),
                        std::move(potentials));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

PerturbedModel read_model_file(const std::filesystem::path& path) {
  return model_from_json(read_text_file(path));
}

std::string cavity_covariance_to_json(const GaussianModel& model,
                                      const CavityCovariance& a) {
  a.check(model);
  json out = json::array();
  for (std::size_t i = 0; i < model.size(); ++i) {
    json ids = json::array();
    for (const Neighbor& nb : model.neighbors(i)) ids.push_back(model.id(nb.index));
    out.push_back({{"node", model.id(i)}, {"neighbors", std::move(ids)},
                   {"A", matrix_rows(a.blocks[i])}});
  }
  return out.dump(2) + "\n";
}

CavityCovariance cavity_covariance_from_json(const GaussianModel& model,
                                             std::string_view text) {
  const json doc = parse(text, ErrorCode::ShapeMismatch);
  if (!doc.is_array()) {
    throw Error(ErrorCode::ShapeMismatch, "cavity covariance file must be a JSON array");
  }
  CavityCovariance out = CavityCovariance::zeros(model);
  std::vector<bool> seen(model.size(), false);
  for (const json& entry : doc) {
    const std::size_t i = model.index_of(integer(field(entry, "node"), "node"));
    if (seen[i]) {
      throw Error(ErrorCode::ShapeMismatch,
                  "node " + std::to_string(model.id(i)) + " listed twice");
    }
    seen[i] = true;
    const auto nbrs = model.neighbors(i);
    const json& ids = field(entry, "neighbors");
    bool match = ids.is_array() && ids.size() == nbrs.size();
    for (std::size_t a = 0; match && a < nbrs.size(); ++a) {
      match = ids[a].is_number_integer() &&
              ids[a].get<NodeId>() == model.id(nbrs[a].index);
    }
    if (!match) {
      throw Error(ErrorCode::ShapeMismatch,
                  "neighbours of node " + std::to_string(model.id(i)) +
                      " do not match the model");
    }
    const json& values = field(entry, "A");
    const std::size_t d = nbrs.size();
    std::vector<double> flat;
    if (values.is_array()) {
      for (const json& v : values) {
        if (v.is_array()) {
          if (v.size() != d) break;
          for (const json& x : v) flat.push_back(x.is_number() ? x.get<double>() : NAN);
        } else {
          flat.push_back(v.is_number() ? v.get<double>() : NAN);
        }
      }
    }
    if (flat.size() != d * d) {
      throw Error(ErrorCode::ShapeMismatch,
                  "A of node " + std::to_string(model.id(i)) + " must be " +
                      std::to_string(d) + "x" + std::to_string(d));
    }
    Eigen::MatrixXd& block = out.blocks[i];
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t c = 0; c < d; ++c) {
        const double v = flat[r * d + c];
        if (!std::isfinite(v)) {
          throw Error(ErrorCode::ShapeMismatch, "A entries must be finite numbers");
        }
        if (r != c) block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
      }
    }
  }
  return out;
}

std::string covariance_to_json(const GaussianModel& model, const Eigen::MatrixXd& c) {
  json out;
  out["ids"] = model.ids();
  out["matrix"] = matrix_rows(c);
  return out.dump(2) + "\n";
}

std::string covariance_to_csv(const GaussianModel& model, const Eigen::MatrixXd& c) {
  std::ostringstream os;
  os.precision(17);
  os << "id";
  for (NodeId id : model.ids()) os << ',' << id;
  os << '\n';
  for (Eigen::Index r = 0; r < c.rows(); ++r) {
    os << model.id(static_cast<std::size_t>(r));
    for (Eigen::Index k = 0; k < c.cols(); ++k) os << ',' << c(r, k);
    os << '\n';
  }
  return os.str();
}

}  // namespace gaussbp
