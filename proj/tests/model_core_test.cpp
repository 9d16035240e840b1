#include <doctest.h>

#include <cmath>

#include "mixedem/model.hpp"
#include "mixedem/simulate.hpp"
#include "test_support.hpp"

using namespace mixedem;

TEST_CASE("validate_model accepts a well-formed minimal input") {
  Vector y(2);
  y << 1, 2;
  Matrix X(2, 1);
  X << 1, 1;
  Matrix Z(2, 1);
  Z << 1, 0;
  const ModelData m = validate_model(y, X, Z);
  CHECK(m.n() == 2);
  CHECK(m.p() == 1);
  CHECK(m.q() == 1);
}

TEST_CASE("validate_model rejects a duplicated X column") {
  Vector y(2);
  y << 1, 2;
  Matrix X(2, 2);
  X << 1, 1, 1, 1;
  Matrix Z(2, 1);
  Z << 1, 0;
  CHECK_THROWS_AS(validate_model(y, X, Z), RankDeficientX);
}

TEST_CASE("validate_model rejects row-count disagreement") {
  Vector y(3);
  y << 1, 2, 3;
  Matrix X(2, 1);
  X << 1, 1;
  Matrix Z(2, 1);
  Z << 1, 0;
  CHECK_THROWS_AS(validate_model(y, X, Z), DimensionMismatch);
}

TEST_CASE("validate_model rejects non-finite entries") {
  Vector y(2);
  y << 1, std::nan("");
  Matrix X(2, 1);
  X << 1, 1;
  Matrix Z(2, 1);
  Z << 1, 0;
  CHECK_THROWS_AS(validate_model(y, X, Z), NonFiniteInput);
  y[1] = 2;
  X(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(validate_model(y, X, Z), NonFiniteInput);
}

TEST_CASE("validate_model admits q = 0 and rejects p = 0") {
  Vector y(3);
  y << 1, 2, 3;
  Matrix X(3, 1);
  X << 1, 1, 1;
  CHECK(validate_model(y, X, Matrix(3, 0)).q() == 0);
  CHECK_THROWS_AS(validate_model(y, Matrix(3, 0), Matrix(3, 1).setOnes()),
                  DimensionMismatch);
}

TEST_CASE("validate_model does not mutate its inputs") {
  const Vector y = Vector::LinSpaced(4, 1.0, 4.0);
  Matrix X(4, 2);
  X << 1, 0.5, 1, -1.0, 1, 2.0, 1, 0.1;
  Matrix Z(4, 2);
  Z << 1, 0, 1, 0, 0, 1, 0, 1;
  const Vector y_copy = y;
  const Matrix x_copy = X, z_copy = Z;
  const ModelData m = validate_model(y, X, Z);
  CHECK(y == y_copy);
  CHECK(X == x_copy);
  CHECK(Z == z_copy);
  // accepted data round-trips unchanged
  CHECK(m.y() == y_copy);
  CHECK(m.X() == x_copy);
  CHECK(m.Z() == z_copy);
}

TEST_CASE("rank check uses a scaled tolerance, not exact zero") {
  Vector y(3);
  y << 1, 2, 3;
  Matrix X(3, 2);
  X << 1, 1 + 1e-17, 1, 1, 1, 1;  // numerically identical columns
  Matrix Z(3, 1);
  Z << 1, 0, 0;
  CHECK_THROWS_AS(validate_model(y, X, Z), RankDeficientX);
}

TEST_CASE("z_from_groups builds the indicator in first-appearance order") {
  const Matrix Z = z_from_groups({"a", "b", "a"});
  Matrix expected(3, 2);
  expected << 1, 0, 0, 1, 1, 0;
  CHECK(Z == expected);

  CHECK(z_from_groups({"g"}) == Matrix::Ones(1, 1));
  CHECK(z_from_groups({"a", "b", "c"}) == Matrix::Identity(3, 3));
  CHECK_THROWS_AS(z_from_groups({}), EmptyInput);
}

TEST_CASE("z_from_groups row sums are 1 and column sums are group sizes") {
  const std::vector<std::string> labels = {"u", "v", "u", "w", "v", "u"};
  const Matrix Z = z_from_groups(labels);
  CHECK(Z.rowwise().sum() == Vector::Ones(6));
  Vector col_sums = Z.colwise().sum();
  Vector expected(3);
  expected << 3, 2, 1;  // u, v, w by first appearance
  CHECK(col_sums == expected);
}

TEST_CASE("simulate reproduces X beta in the vanishing-noise limit") {
  SimulationSpec spec;
  spec.group_sizes = {5, 5, 5};
  spec.beta_true = Vector(3);
  spec.beta_true << 2.0, 1.0, -0.5;
  spec.std_normal_covariates = 2;
  spec.tau2_true = 1e-12;
  spec.sigma2_true = 1e-12;
  spec.seed = 99;
  const SimulationResult sim = simulate(spec);
  const Vector fitted = sim.data.X() * spec.beta_true;
  CHECK((sim.data.y() - fitted).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("simulate is a pure function of the spec") {
  SimulationSpec spec;
  spec.group_sizes = {4, 3, 2};
  spec.beta_true = Vector(2);
  spec.beta_true << 1.0, 0.25;
  spec.std_normal_covariates = 1;
  spec.seed = 20240131;
  const SimulationResult a = simulate(spec);
  const SimulationResult b = simulate(spec);
  CHECK(a.data.y() == b.data.y());
  CHECK(a.data.X() == b.data.X());
  CHECK(a.data.Z() == b.data.Z());
  CHECK(a.eta == b.eta);
  CHECK(a.eps == b.eps);

  spec.seed = 20240132;
  const SimulationResult c = simulate(spec);
  CHECK(a.data.y() != c.data.y());
}

TEST_CASE("simulated residual draws have the requested variance at large n") {
  SimulationSpec spec;
  spec.group_sizes = {10000};
  spec.beta_true = Vector(1);
  spec.beta_true << 0.0;
  spec.std_normal_covariates = 0;
  spec.tau2_true = 1.0;
  spec.sigma2_true = 1.0;
  spec.seed = 7;
  const SimulationResult sim = simulate(spec);
  const double mean = sim.eps.mean();
  const double var =
      (sim.eps.array() - mean).square().sum() / (sim.eps.size() - 1);
  CHECK(var == doctest::Approx(1.0).epsilon(0.10));
}

TEST_CASE("simulate validates its spec") {
  SimulationSpec spec;
  spec.beta_true = Vector(1);
  spec.beta_true << 1.0;
  CHECK_THROWS_AS(simulate(spec), InvalidArgument);  // no groups
  spec.group_sizes = {2, 0};
  CHECK_THROWS_AS(simulate(spec), InvalidArgument);  // empty group
  spec.group_sizes = {2, 2};
  spec.tau2_true = -1.0;
  CHECK_THROWS_AS(simulate(spec), InvalidArgument);  // negative variance
  spec.tau2_true = 1.0;
  spec.std_normal_covariates = 3;  // p mismatch with beta_true
  CHECK_THROWS_AS(simulate(spec), InvalidArgument);
}

TEST_CASE("criterion parsing") {
  CHECK(criterion_from_string("ml") == Criterion::ML);
  CHECK(criterion_from_string("REML") == Criterion::REML);
  CHECK_THROWS_AS(criterion_from_string("mle"), InvalidArgument);
  CHECK(std::string(to_string(Criterion::REML)) == "REML");
}

TEST_CASE("variance components must be strictly positive") {
  CHECK_THROWS_AS(VarianceComponents(0.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(VarianceComponents(1.0, -2.0), InvalidArgument);
  const VarianceComponents vc(0.5, 2.0);
  CHECK(vc.tau2() == 0.5);
  CHECK(vc.sigma2() == 2.0);
}
