#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "qproj/qp_core.hpp"
#include "support.hpp"

using namespace qproj;
namespace qt = qproj::testing;

namespace {

bool mentions(const std::vector<std::string>& violations, const std::string& needle) {
  for (const auto& v : violations)
    if (v.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("validate_instance accepts the 1-D box QP") {
  CHECK(validate_instance(qt::one_dim_box()).empty());
}

TEST_CASE("validate_instance flags an infeasible origin") {
  QpInstance inst = qt::one_dim_box();
  inst.b << -1.0, 1.0;
  const auto violations = validate_instance(inst);
  REQUIRE(!violations.empty());
  CHECK(mentions(violations, "origin infeasible"));
}

TEST_CASE("validate_instance flags a non-PSD Q") {
  QpInstance inst = qt::one_dim_box();
  inst.Q(0, 0) = -1.0;
  CHECK(mentions(validate_instance(inst), "not PSD"));
}

TEST_CASE("validate_instance flags asymmetry and dimension mismatch") {
  QpInstance inst = qt::two_dim_box();
  inst.Q(0, 1) = 0.5;  // Q(1,0) stays 0
  CHECK(mentions(validate_instance(inst), "symmetric"));

  QpInstance bad_dims = qt::two_dim_box();
  bad_dims.c = Vector::Zero(3);
  CHECK(!validate_instance(bad_dims).empty());
}

TEST_CASE("perturb adds gamma to the diagonal only") {
  QpInstance inst;
  inst.Q = Matrix::Zero(1, 1);
  inst.c = Vector::Zero(1);
  inst.A = Matrix::Ones(1, 1);
  inst.b = Vector::Ones(1);

  const QpInstance out = perturb(inst, PerturbSpec{0.5});
  CHECK(out.Q(0, 0) == 0.5);
  CHECK(out.c == inst.c);
  CHECK(out.A == inst.A);
  CHECK(out.b == inst.b);
}

TEST_CASE("perturb scales the identity") {
  QpInstance inst = qt::two_dim_box();
  const QpInstance out = perturb(inst, PerturbSpec{0.1});
  CHECK((out.Q - 1.1 * Matrix::Identity(2, 2)).norm() == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("perturb shifts eigenvalues of a singular Q") {
  QpInstance inst = qt::two_dim_box();
  inst.Q << 1, 0, 0, 0;
  const QpInstance out = perturb(inst, PerturbSpec{0.01});
  Eigen::SelfAdjointEigenSolver<Matrix> es(out.Q, Eigen::EigenvaluesOnly);
  CHECK(es.eigenvalues()(0) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(es.eigenvalues()(1) == doctest::Approx(1.01).epsilon(1e-12));
}

TEST_CASE("project forms P'QP, AP, P'c") {
  const QpInstance inst = qt::two_dim_box();

  SUBCASE("first coordinate column") {
    const ProjectedQp pqp = project(inst, qt::single_column({1.0, 0.0}));
    CHECK(pqp.Qt(0, 0) == 1.0);
    CHECK(pqp.ct(0) == -1.0);
    Vector at_expect(4);
    at_expect << 1, -1, 0, 0;
    CHECK((pqp.At.col(0) - at_expect).norm() == 0.0);
    CHECK(pqp.b == inst.b);
  }

  SUBCASE("identity projection reproduces the instance") {
    const ProjectedQp pqp = project(inst, identity_projection(2));
    CHECK(pqp.Qt == inst.Q);
    CHECK(pqp.At == inst.A);
    CHECK(pqp.ct == inst.c);
  }

  SUBCASE("second coordinate column") {
    const ProjectedQp pqp = project(inst, qt::single_column({0.0, 1.0}));
    CHECK(pqp.ct(0) == 0.0);
  }
}

TEST_CASE("project rejects bad inputs") {
  const QpInstance inst = qt::two_dim_box();
  CHECK_THROWS_AS(project(inst, qt::single_column({1.0, 0.0, 0.0})), std::invalid_argument);

  ProjectionMatrix deficient;
  deficient.P = Matrix::Zero(2, 2);
  deficient.P.col(0) << 1, 1;
  deficient.P.col(1) << 1, 1;
  CHECK(!deficient.full_column_rank());
  CHECK_THROWS_AS(project(inst, deficient), std::invalid_argument);
}

TEST_CASE("congruence preserves positive semidefiniteness") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const QpInstance inst = qt::random_pd_instance(4, 8, 100 + seed);
    ProjectionMatrix P{qt::random_matrix(4, 2, 200 + seed)};
    REQUIRE(P.full_column_rank());
    const ProjectedQp pqp = project(inst, P);
    Eigen::SelfAdjointEigenSolver<Matrix> es(pqp.Qt, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues()(0) >= -1e-12 * std::max(1.0, es.eigenvalues().maxCoeff()));
    CHECK((pqp.Qt - pqp.Qt.transpose()).norm() == doctest::Approx(0.0).epsilon(1e-14));
  }
}

TEST_CASE("perturb and project commute up to gamma P'P") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const QpInstance inst = qt::random_pd_instance(5, 10, 300 + seed);
    ProjectionMatrix P{qt::random_matrix(5, 3, 400 + seed)};
    const double gamma = 0.37;

    const Matrix qt_perturbed = project(perturb(inst, PerturbSpec{gamma}), P).Qt;
    const Matrix qt_shifted = project(inst, P).Qt + gamma * P.P.transpose() * P.P;
    const double scale = std::max(1.0, qt_shifted.norm());
    CHECK((qt_perturbed - qt_shifted).norm() <= 1e-12 * scale);
  }
}

TEST_CASE("perturbation preserves validity") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const QpInstance inst = qt::random_pd_instance(4, 8, 500 + seed);
    REQUIRE(validate_instance(inst).empty());
    CHECK(validate_instance(perturb(inst, PerturbSpec{1e-3})).empty());
  }
}

TEST_CASE("identity_projection is the identity and full rank") {
  const ProjectionMatrix P = identity_projection(4);
  CHECK(P.P == Matrix::Identity(4, 4));
  CHECK(P.full_column_rank());
}
