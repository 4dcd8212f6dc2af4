#include "gaussbp_cli/run_result.hpp"

#include <cmath>
#include <limits>

#include "gaussbp/error.hpp"
#include "json.hpp"

namespace gaussbp::cli {
namespace {

using json = nlohmann::ordered_json;

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double get_num(const json& v) {
  if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!v.is_number()) throw Error(ErrorCode::InvalidArgument, "expected a number");
  return v.get<double>();
}

const json& at(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw Error(ErrorCode::InvalidArgument, std::string("result lacks \"") + key + "\"");
  }
  return obj.at(key);
}

bool same(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

bool same(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (!same(a[k], b[k])) return false;
  }
  return true;
}

}  // namespace

std::string to_json(const RunResult& r) {
  json out;
  out["algorithm"] = r.algorithm;
  json nodes = json::array();
  for (std::size_t k = 0; k < r.ids.size(); ++k) {
    nodes.push_back({{"id", r.ids[k]}, {"mean", num(r.means[k])}, {"variance", num(r.variances[k])}});
  }
  out["nodes"] = std::move(nodes);
  if (r.covariance) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < r.covariance->rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < r.covariance->cols(); ++j) row.push_back(num((*r.covariance)(i, j)));
      rows.push_back(std::move(row));
    }
    out["covariance"] = {{"ids", r.ids}, {"matrix", std::move(rows)}};
  }
  if (r.sites) {
    json sites = json::array();
    for (std::size_t k = 0; k < r.ids.size(); ++k) {
      sites.push_back({{"id", r.ids[k]},
                       {"precision", num(r.sites->precision[k])},
                       {"shift", num(r.sites->shift[k])}});
    }
    out["sites"] = std::move(sites);
  }
  out["report"] = {{"iterations", r.report.iterations},
                   {"residual", num(r.report.residual)},
                   {"converged", r.report.converged},
                   {"skipped_updates", r.report.skipped_updates},
                   {"wall_ms", num(r.wall_ms)}};
  if (!r.stats.empty()) {
    json stats = json::object();
    for (const auto& [k, v] : r.stats) stats[k] = num(v);
    out["stats"] = std::move(stats);
  }
  return out.dump(2) + "\n";
}

RunResult run_result_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed result JSON: ") + e.what());
  }
  try {
    RunResult r;
    r.algorithm = at(doc, "algorithm").get<std::string>();
    for (const json& n : at(doc, "nodes")) {
      r.ids.push_back(at(n, "id").get<NodeId>());
      r.means.push_back(get_num(at(n, "mean")));
      r.variances.push_back(get_num(at(n, "variance")));
    }
    if (doc.contains("covariance")) {
      const json& rows = at(doc["covariance"], "matrix");
      const auto n = static_cast<Eigen::Index>(rows.size());
      Eigen::MatrixXd c(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const json& row = rows[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(row.size()) != n) {
          throw Error(ErrorCode::InvalidArgument, "covariance must be square");
        }
        for (Eigen::Index j = 0; j < n; ++j) c(i, j) = get_num(row[static_cast<std::size_t>(j)]);
      }
      r.covariance = std::move(c);
    }
    if (doc.contains("sites")) {
      SiteApproximation sites;
      for (const json& s : doc["sites"]) {
        sites.precision.push_back(get_num(at(s, "precision")));
        sites.shift.push_back(get_num(at(s, "shift")));
      }
      r.sites = std::move(sites);
    }
    const json& rep = at(doc, "report");
    r.report.iterations = at(rep, "iterations").get<int>();
    r.report.residual = get_num(at(rep, "residual"));
    r.report.converged = at(rep, "converged").get<bool>();
    r.report.skipped_updates = at(rep, "skipped_updates").get<std::size_t>();
    r.wall_ms = get_num(at(rep, "wall_ms"));
    if (doc.contains("stats")) {
      for (const auto& [k, v] : doc["stats"].items()) r.stats[k] = get_num(v);
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed result JSON: ") + e.what());
  }
}

bool same_result(const RunResult& a, const RunResult& b) {
  if (a.algorithm != b.algorithm || a.ids != b.ids || !same(a.means, b.means) ||
      !same(a.variances, b.variances) || a.covariance.has_value() != b.covariance.has_value() ||
      a.sites.has_value() != b.sites.has_value() || a.report.iterations != b.report.iterations ||
      !same(a.report.residual, b.report.residual) || a.report.converged != b.report.converged ||
      a.report.skipped_updates != b.report.skipped_updates || !same(a.wall_ms, b.wall_ms) ||
      a.stats.size() != b.stats.size()) {
    return false;
  }
  if (a.covariance) {
    if (a.covariance->rows() != b.covariance->rows() || a.covariance->cols() != b.covariance->cols()) {
      return false;
    }
    for (Eigen::Index k = 0; k < a.covariance->size(); ++k) {
      if (!same(a.covariance->data()[k], b.covariance->data()[k])) return false;
    }
  }
  if (a.sites && (!same(a.sites->precision, b.sites->precision) ||
                  !same(a.sites->shift, b.sites->shift))) {
    return false;
  }
  for (const auto& [k, v] : a.stats) {
    const auto it = b.stats.find(k);
    if (it == b.stats.end() || !same(v, it->second)) return false;
  }
  return true;
}

}  // namespace gaussbp::cli
