#include <cmath>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "fixtures.hpp"
#include "gaussbp/generate.hpp"
#include "gaussbp/io.hpp"
#include "gaussbp/oracle.hpp"

using namespace gaussbp;
using fixtures::error_of;

TEST_CASE("structured families") {
  const GaussianModel chain = generate_model({ModelKind::chain, 2, 0.3, 0});
  CHECK(chain.edge_count() == 1);
  const GaussianModel cycle = generate_model({ModelKind::cycle, 4, 0.3, 0});
  CHECK(cycle.edge_count() == 4);
  for (const EdgeSpec& e : cycle.edges()) CHECK(e.coupling == 0.3);
  for (const NodeSpec& n : cycle.nodes()) {
    CHECK(n.mu == 1.0);
    CHECK(n.s == 1.0);
  }
  CHECK(generate_model({ModelKind::grid, 9, 0.2, 0}).edge_count() == 12);
  CHECK(generate_model({ModelKind::tree, 17, 0.4, 5}).edge_count() == 16);
  CHECK(generate_model({ModelKind::chain, 1, 0.3, 0}).size() == 1);
}

TEST_CASE("random families are dominant and seeded") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const GaussianModel m = fixtures::random_dominant(30, seed);
    const ValidationReport r = validate(m);
    CHECK(r.positive_definite);
    CHECK(r.diagonally_dominant);
  }
  const GenerateSpec spec{ModelKind::random_dominant, 25, 0.5, 7};
  CHECK(model_to_json(PerturbedModel(generate_model(spec))) ==
        model_to_json(PerturbedModel(generate_model(spec))));
  GenerateSpec other = spec;
  other.seed = 8;
  CHECK_FALSE(generate_model(spec) == generate_model(other));
}

TEST_CASE("generator errors") {
  CHECK(error_of([] { generate_model({ModelKind::cycle, 2, 0.3, 0}); }) ==
        ErrorCode::InvalidArgument);
  CHECK(error_of([] { generate_model({ModelKind::grid, 10, 0.3, 0}); }) ==
        ErrorCode::InvalidArgument);
  CHECK(error_of([] { generate_model({ModelKind::chain, 0, 0.3, 0}); }) ==
        ErrorCode::InvalidArgument);
  CHECK(error_of([] { generate_model({ModelKind::chain, 3, -0.3, 0}); }) ==
        ErrorCode::InvalidArgument);
  CHECK(error_of([] { generate_model({ModelKind::cycle, 4, 0.6, 0}); }) ==
        ErrorCode::NotPositiveDefinite);
}

TEST_CASE("kind names") {
  for (ModelKind k : {ModelKind::chain, ModelKind::cycle, ModelKind::grid, ModelKind::tree,
                      ModelKind::random_dominant}) {
    CHECK(parse_model_kind(to_string(k)) == k);
  }
  CHECK_FALSE(parse_model_kind("lattice").has_value());
}

TEST_CASE("uniform source") {
  UniformSource a(42);
  UniformSource b(42);
  for (int k = 0; k < 1000; ++k) {
    const double x = a.next();
    CHECK(x == b.next());
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  UniformSource c(1);
  for (int k = 0; k < 100; ++k) CHECK(c.index(7) < 7);
}

TEST_CASE("model JSON") {
  const PerturbedModel pm(fixtures::star3(), {{1, NonlinearPotential::quartic(0.25)},
                                              {2, NonlinearPotential::double_well(0.1, 2.0)}});
  const std::string text = model_to_json(pm);
  CHECK(model_from_json(text) == pm);
  CHECK(model_to_json(model_from_json(text)) == text);

  SUBCASE("input order does not matter") {
    const std::string shuffled = R"({
      "edges": [{"J": -0.3, "i": 2, "j": 0}, {"i": 0, "j": 1, "J": 0.4}],
      "nodes": [{"id": 2, "mu": -0.7, "s": 1.5}, {"id": 0, "mu": 0.5, "s": 1.2},
                {"id": 1, "mu": 1.0, "s": 0.8}]})";
    CHECK(model_to_json(model_from_json(shuffled)) == model_to_json(PerturbedModel(fixtures::star3())));
  }
  SUBCASE("no potentials key for Gaussian models") {
    CHECK(model_to_json(PerturbedModel(fixtures::chain3())).find("potentials") ==
          std::string::npos);
  }
  SUBCASE("malformed") {
    CHECK(error_of([] { model_from_json("{"); }) == ErrorCode::InvalidModel);
    CHECK(error_of([] { model_from_json("[]"); }) == ErrorCode::InvalidModel);
    CHECK(error_of([] { model_from_json(R"({"nodes": [{"id": 0, "mu": 0}]})"); }) ==
          ErrorCode::InvalidModel);
    CHECK(error_of([] { model_from_json(R"({"nodes": [{"id": 0.5, "mu": 0, "s": 1}]})"); }) ==
          ErrorCode::InvalidModel);
    CHECK(error_of([] {
            model_from_json(R"({"nodes": [{"id": 0, "mu": 0, "s": 1}],
                                "potentials": [{"id": 0, "kind": "sextic"}]})");
          }) == ErrorCode::InvalidModel);
    CHECK(error_of([] {
            model_from_json(R"({"nodes": [{"id": 0, "mu": 0, "s": 1}],
                                "edges": [{"i": 0, "j": 3, "J": 0.1}]})");
          }) == ErrorCode::DanglingNeighbor);
  }
}

TEST_CASE("files") {
  const auto dir = std::filesystem::temp_directory_path() / "gaussbp_io_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "model.json";
  const PerturbedModel pm(fixtures::cycle4());
  write_text_file(path, model_to_json(pm));
  CHECK(read_model_file(path) == pm);
  CHECK(error_of([&] { read_text_file(dir / "missing.json"); }) == ErrorCode::Io);
  std::filesystem::remove_all(dir);
}

TEST_CASE("cavity covariance JSON") {
  const GaussianModel m = fixtures::random_dominant(10, 4);
  const CavityCovariance a = exact_cavity_covariances(m);
  const CavityCovariance back = cavity_covariance_from_json(m, cavity_covariance_to_json(m, a));
  for (std::size_t i = 0; i < m.size(); ++i) {
    CHECK(fixtures::max_abs(a.blocks[i], back.blocks[i]) == 0.0);
  }

  const GaussianModel c = fixtures::cycle4();
  SUBCASE("flat rows are accepted") {
    const std::string flat = R"([{"node": 0, "neighbors": [1, 3], "A": [0, 0.5, 0.5, 0]}])";
    const CavityCovariance f = cavity_covariance_from_json(c, flat);
    CHECK(f.blocks[0](0, 1) == 0.5);
    CHECK(f.blocks[1].cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("wrong neighbours") {
    const std::string bad = R"([{"node": 0, "neighbors": [1, 2], "A": [[0, 1], [1, 0]]}])";
    CHECK(error_of([&] { cavity_covariance_from_json(c, bad); }) == ErrorCode::ShapeMismatch);
  }
  SUBCASE("wrong size") {
    const std::string bad = R"([{"node": 0, "neighbors": [1, 3], "A": [[0]]}])";
    CHECK(error_of([&] { cavity_covariance_from_json(c, bad); }) == ErrorCode::ShapeMismatch);
  }
}

TEST_CASE("covariance output") {
  const GaussianModel m = fixtures::chain3();
  const Eigen::MatrixXd c = exact_gaussian(m).covariance;
  const std::string csv = covariance_to_csv(m, c);
  CHECK(csv.starts_with("id,1,2,3\n1,"));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  const std::string js = covariance_to_json(m, c);
  CHECK(js.find("\"ids\"") != std::string::npos);
  CHECK(js.find("\"matrix\"") != std::string::npos);
}
