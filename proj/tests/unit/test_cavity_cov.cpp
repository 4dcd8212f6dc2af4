#include <cmath>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "gaussbp/cavity_cov.hpp"
#include "gaussbp/gabp.hpp"
#include "gaussbp/oracle.hpp"
#include "oracle_values.hpp"

using namespace gaussbp;
using fixtures::error_of;
using fixtures::max_abs;

namespace {

KappaU kappa_of(const GaussianModel& m, NodeId id) {
  const BpResult full = run_gabp(m, fixtures::tight());
  const BpResult cavity = run_gabp(remove_node(m, id), fixtures::tight());
  return kappa_u(m, id, full, cavity, fixtures::tight());
}

}  // namespace

TEST_CASE("response propagation") {
  SUBCASE("star centre has uncorrelated leaves") {
    const ResponseResult r = response_propagation(fixtures::star3(), 0);
    REQUIRE(r.a_block.rows() == 2);
    CHECK(r.a_block.cwiseAbs().maxCoeff() < 1e-15);
    CHECK(r.covariance(0, 0) == doctest::Approx(0.8));
  }
  SUBCASE("four-cycle") {
    const ResponseResult r = response_propagation(fixtures::cycle4(), 0, fixtures::tight());
    CHECK(r.neighbors == std::vector<NodeId>{1, 3});
    CHECK(r.a_block(0, 1) ==
          doctest::Approx(oracle_values::kCycleCavityOffDiagonal).epsilon(1e-10));
    CHECK(r.a_block(0, 0) == 0.0);
    CHECK(r.covariance(1, 1) ==
          doctest::Approx(oracle_values::kCycleCavityVariance).epsilon(1e-10));
  }
  SUBCASE("triangle") {
    const ResponseResult r = response_propagation(fixtures::triangle(), 0, fixtures::tight());
    CHECK(r.a_block(0, 1) ==
          doctest::Approx(oracle_values::kTriangleCavityOffDiagonal).epsilon(1e-10));
  }
  SUBCASE("random graphs match the exact blocks") {
    for (std::uint64_t seed = 40; seed < 44; ++seed) {
      const GaussianModel m = fixtures::random_dominant(15, seed);
      const CavityCovariance est = estimate_cavity_covariances(m, fixtures::tight());
      const CavityCovariance ref = exact_cavity_covariances(m);
      for (std::size_t i = 0; i < m.size(); ++i) {
        CHECK(max_abs(est.blocks[i], ref.blocks[i]) < 1e-8);
      }
    }
  }
  SUBCASE("worker count does not change the result") {
    const GaussianModel m = fixtures::random_dominant(20, 6);
    const CavityCovariance one = estimate_cavity_covariances(m, fixtures::tight(), 1);
    const CavityCovariance three = estimate_cavity_covariances(m, fixtures::tight(), 3);
    for (std::size_t i = 0; i < m.size(); ++i) CHECK(one.blocks[i] == three.blocks[i]);
  }
  SUBCASE("unconverged cavity run is refused") {
    const GaussianModel m = fixtures::cycle4();
    const GaussianModel cav = remove_node(m, 0);
    BpResult run = run_gabp(cav);
    run.report.converged = false;
    CHECK(error_of([&] { response_propagation(m, 0, cav, run); }) ==
          ErrorCode::CavityGraphNotConverged);
  }
}

TEST_CASE("kappa and loop-corrected variance") {
  SUBCASE("tree reduces to BP quantities") {
    const GaussianModel m = fixtures::tree(10, 12);
    const BpResult full = run_gabp(m, fixtures::tight());
    for (std::size_t i = 0; i < m.size(); ++i) {
      const KappaU ku = kappa_of(m, m.id(i));
      CHECK(ku.variance == doctest::Approx(full.marginals.var[i]).epsilon(1e-10));
      for (std::size_t k = 0; k < ku.neighbors.size(); ++k) {
        const std::size_t j = m.index_of(ku.neighbors[k]);
        const double expect = m.coupling(i, j) * full.messages.var[m.slot(j, i)];
        CHECK(ku.kappa[k] == doctest::Approx(expect).epsilon(1e-9));
      }
    }
  }
  SUBCASE("four-cycle") {
    const KappaU ku = kappa_of(fixtures::cycle4(), 0);
    CHECK(ku.kappa[0] == doctest::Approx(oracle_values::kCycleKappa[0]).epsilon(1e-9));
    CHECK(ku.kappa[1] == doctest::Approx(oracle_values::kCycleKappa[1]).epsilon(1e-9));
    CHECK(ku.variance == doctest::Approx(oracle_values::kCycleCovariance[0]).epsilon(1e-9));
    CHECK(ku.u[0] == doctest::Approx(oracle_values::kCycleMeans[1]).epsilon(1e-9));
  }
  SUBCASE("mixed-sign six-cycle") {
    const GaussianModel m = fixtures::six_cycle();
    const BpResult full = run_gabp(m, fixtures::tight());
    for (std::size_t i = 0; i < m.size(); ++i) {
      const BpResult cav = run_gabp(remove_node(m, m.id(i)), fixtures::tight());
      const double v = lc_variance_via_cavity_bp(m, m.id(i), full, cav, fixtures::tight());
      CHECK(v == doctest::Approx(oracle_values::kSixCycleVariances[i]).epsilon(1e-9));
    }
  }
  SUBCASE("field shift leaves kappa unchanged") {
    const GaussianModel m = fixtures::random_dominant(12, 13);
    std::vector<double> mu;
    for (const NodeSpec& n : m.nodes()) mu.push_back(n.mu + 0.7);
    const GaussianModel shifted = m.with_fields(mu);
    for (std::size_t i = 0; i < m.size(); ++i) {
      const KappaU a = kappa_of(m, m.id(i));
      const KappaU b = kappa_of(shifted, m.id(i));
      CHECK(max_abs(a.kappa, b.kappa) < 1e-8);
      CHECK(a.variance == doctest::Approx(b.variance).epsilon(1e-9));
    }
  }
  SUBCASE("zero fields trigger the shift") {
    const GaussianModel m = fixtures::zero_fields(fixtures::random_dominant(8, 2));
    const ExactSolution e = exact_gaussian(m);
    for (std::size_t i = 0; i < m.size(); ++i) {
      const KappaU ku = kappa_of(m, m.id(i));
      CHECK(ku.field_shifted);
      CHECK(ku.mean == 0.0);
      CHECK(ku.variance == doctest::Approx(e.covariance(i, i)).epsilon(1e-9));
    }
  }
  SUBCASE("threshold scale") {
    DegenerateMeanPolicy p;
    CHECK(p.threshold(fixtures::chain3()) == doctest::Approx(1e-2));
    const double mu[] = {-40.0, 2.0, 0.0};
    CHECK(p.threshold(fixtures::chain3().with_fields(mu)) == doctest::Approx(0.4));
  }
}

TEST_CASE("second moments around a node") {
  const GaussianModel m = fixtures::cycle4();
  const ExactSolution e = exact_gaussian(m);
  const Eigen::MatrixXd second = e.covariance + e.means * e.means.transpose();
  const KappaU ku = kappa_of(m, 0);
  const Eigen::MatrixXd cav = exact_gaussian(remove_node(m, 0)).covariance;
  Eigen::MatrixXd block(2, 2);
  block << cav(0, 0), cav(0, 2), cav(2, 0), cav(2, 2);
  const CovarianceEntries c = covariance_entries(ku, block);
  CHECK(c.second_ii == doctest::Approx(second(0, 0)).epsilon(1e-9));
  CHECK(c.second_ij[0] == doctest::Approx(second(0, 1)).epsilon(1e-9));
  CHECK(c.second_ij[1] == doctest::Approx(second(0, 3)).epsilon(1e-9));
  CHECK(c.second_jk(0, 1) == doctest::Approx(second(1, 3)).epsilon(1e-9));
  CHECK(c.second_jk(1, 1) == doctest::Approx(second(3, 3)).epsilon(1e-9));
  CHECK(error_of([&] { covariance_entries(ku, Eigen::MatrixXd::Zero(3, 3)); }) ==
        ErrorCode::ShapeMismatch);
}

TEST_CASE("growing covariance") {
  SUBCASE("single node") {
    const GaussianModel m({{3, 0.5, 2.0}}, {});
    const NodeId order[] = {3};
    const CovarianceResult c = full_covariance_growing(m, order);
    CHECK(c.covariance(0, 0) == 2.0);
    CHECK(c.growth_steps == 0);
    CHECK(c.bp_runs == 0);
  }
  SUBCASE("star") {
    const GaussianModel m = fixtures::star3();
    const std::vector<NodeId> order = growth_order(m, GrowthOrder::id);
    const CovarianceResult c = full_covariance_growing(m, order, fixtures::tight());
    const Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>> ref(
        oracle_values::kStarCovariance);
    CHECK(max_abs(c.covariance, Eigen::MatrixXd(ref)) < 1e-10);
    CHECK(max_abs(oracle_values::kStarMeans, c.means) < 1e-10);
  }
  SUBCASE("random graphs in both orders") {
    for (GrowthOrder g : {GrowthOrder::id, GrowthOrder::degree}) {
      const GaussianModel m = fixtures::random_dominant(20, 77);
      const CovarianceResult c =
          full_covariance_growing(m, growth_order(m, g), fixtures::tight());
      const ExactSolution e = exact_gaussian(m);
      CHECK(max_abs(c.covariance, e.covariance) < 1e-7);
      CHECK((c.means - e.means).cwiseAbs().maxCoeff() < 1e-8);
      CHECK(c.growth_steps == 19);
      CHECK(c.bp_runs == 19);
    }
  }
  SUBCASE("zero fields") {
    const GaussianModel m = fixtures::zero_fields(fixtures::random_dominant(15, 4));
    const CovarianceResult c =
        full_covariance_growing(m, growth_order(m, GrowthOrder::id), fixtures::tight());
    CHECK(max_abs(c.covariance, exact_gaussian(m).covariance) < 1e-7);
    CHECK(c.means.cwiseAbs().maxCoeff() < 1e-8);
    CHECK(c.bp_runs == 14);
    CHECK(c.field_shifts > 0);
  }
  SUBCASE("degree order puts hubs first") {
    const GaussianModel m = fixtures::star3();
    CHECK(growth_order(m, GrowthOrder::degree).front() == 0);
  }
  SUBCASE("bad order") {
    const GaussianModel m = fixtures::chain3();
    const NodeId repeated[] = {1, 1, 2};
    const NodeId missing[] = {1, 2};
    CHECK(error_of([&] { full_covariance_growing(m, repeated); }) == ErrorCode::InvalidArgument);
    CHECK(error_of([&] { full_covariance_growing(m, missing); }) == ErrorCode::InvalidArgument);
  }
  SUBCASE("indefinite prefix") {
    const GaussianModel m({{0, 1.0, 1.0}, {1, 1.0, 1.0}}, {{0, 1, 2.0}});
    const NodeId order[] = {0, 1};
    CHECK(error_of([&] { full_covariance_growing(m, order); }) ==
          ErrorCode::PrefixNotPositiveDefinite);
  }
}

TEST_CASE("cavity-based covariance") {
  const GaussianModel m = fixtures::random_dominant(16, 21);
  const CovarianceResult c = full_covariance_cavity(m, fixtures::tight(), 2);
  const ExactSolution e = exact_gaussian(m);
  CHECK(max_abs(c.covariance, e.covariance) < 1e-7);
  CHECK(c.covariance.isApprox(c.covariance.transpose(), 0.0));
  CHECK(c.bp_runs >= 1 + m.size());
}
