#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "gaussbp/oracle.hpp"
#include "oracle_values.hpp"

using namespace gaussbp;
using fixtures::error_of;
using fixtures::max_abs;

TEST_CASE("exact_gaussian on small models") {
  SUBCASE("single node") {
    const ExactSolution e = exact_gaussian(GaussianModel({{0, 0.7, 2.5}}, {}));
    CHECK(e.means(0) == doctest::Approx(0.7));
    CHECK(e.covariance(0, 0) == doctest::Approx(2.5));
  }
  SUBCASE("pair by hand") {
    // Precision [[1, -J], [-J, 1]] has inverse [[1, J], [J, 1]] / (1 - J^2).
    const double j = 0.5;
    const ExactSolution e =
        exact_gaussian(GaussianModel({{0, 1.0, 1.0}, {1, 0.0, 1.0}}, {{0, 1, j}}));
    CHECK(e.covariance(0, 0) == doctest::Approx(1.0 / (1 - j * j)));
    CHECK(e.covariance(0, 1) == doctest::Approx(j / (1 - j * j)));
    CHECK(e.means(1) == doctest::Approx(j / (1 - j * j)));
  }
  SUBCASE("four-cycle") {
    const ExactSolution e = exact_gaussian(fixtures::cycle4());
    const Eigen::Map<const Eigen::Matrix<double, 4, 4, Eigen::RowMajor>> c(
        oracle_values::kCycleCovariance);
    CHECK(max_abs(oracle_values::kCycleMeans, e.means) < 1e-12);
    CHECK(max_abs(e.covariance, Eigen::MatrixXd(c)) < 1e-12);
  }
  SUBCASE("star") {
    const ExactSolution e = exact_gaussian(fixtures::star3());
    const Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>> c(
        oracle_values::kStarCovariance);
    CHECK(max_abs(oracle_values::kStarMeans, e.means) < 1e-12);
    CHECK(max_abs(e.covariance, Eigen::MatrixXd(c)) < 1e-12);
  }
  SUBCASE("indefinite") {
    CHECK(error_of([] {
            exact_gaussian(GaussianModel({{0, 0, 1}, {1, 0, 1}}, {{0, 1, 2.0}}));
          }) == ErrorCode::NotPositiveDefinite);
  }
}

TEST_CASE("exact cavity blocks") {
  SUBCASE("four-cycle") {
    const GaussianModel m = fixtures::cycle4();
    const Eigen::MatrixXd b = exact_cavity_block(m, 0);
    REQUIRE(b.rows() == 2);
    CHECK(b(0, 1) == doctest::Approx(oracle_values::kCycleCavityOffDiagonal).epsilon(1e-12));
    CHECK(b(0, 0) == doctest::Approx(oracle_values::kCycleCavityVariance).epsilon(1e-12));
  }
  SUBCASE("triangle") {
    const Eigen::MatrixXd b = exact_cavity_block(fixtures::triangle(), 0);
    CHECK(b(0, 1) == doctest::Approx(oracle_values::kTriangleCavityOffDiagonal).epsilon(1e-12));
  }
  SUBCASE("tree blocks are diagonal") {
    const GaussianModel m = fixtures::tree(15, 4);
    const CavityCovariance a = exact_cavity_covariances(m);
    a.check(m);
    for (const Eigen::MatrixXd& b : a.blocks) {
      Eigen::MatrixXd off = b;
      off.diagonal().setZero();
      CHECK(off.cwiseAbs().maxCoeff() < 1e-14);
    }
  }
}

TEST_CASE("exact_perturbed") {
  SUBCASE("no potentials reproduces the Gaussian") {
    const GaussianModel m = fixtures::star3();
    const PerturbedSolution p = exact_perturbed(PerturbedModel(m));
    const ExactSolution e = exact_gaussian(m);
    CHECK(max_abs(p.covariance, e.covariance) < 1e-8);
    CHECK((p.means - e.means).cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("even density has zero mean and shrinks") {
    const PerturbedModel pm(GaussianModel({{0, 0.0, 1.0}}, {}),
                            {{0, NonlinearPotential::quartic(0.1)}});
    const PerturbedSolution p = exact_perturbed(pm);
    CHECK(std::abs(p.means(0)) < 1e-12);
    CHECK(p.covariance(0, 0) ==
          doctest::Approx(oracle_values::kQuarticMoments[2]).epsilon(1e-8));
  }
  SUBCASE("coupled pair") {
    const PerturbedModel pm(GaussianModel({{0, 0.5, 1.0}, {1, 0.0, 1.0}}, {{0, 1, 0.4}}),
                            {{1, NonlinearPotential::quartic(0.05)}});
    const PerturbedSolution p = exact_perturbed(pm);
    CHECK(max_abs(oracle_values::kPairMeans, p.means) < 1e-7);
    const Eigen::Map<const Eigen::Matrix<double, 2, 2, Eigen::RowMajor>> c(
        oracle_values::kPairCovariance);
    CHECK(max_abs(p.covariance, Eigen::MatrixXd(c)) < 1e-7);
  }
  SUBCASE("too many nodes") {
    const PerturbedModel pm(fixtures::random_dominant(5, 1), {{0, NonlinearPotential::quartic(1)}});
    CHECK(error_of([&] { exact_perturbed(pm); }) == ErrorCode::DimensionTooLarge);
  }
}
