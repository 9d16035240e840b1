#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mixedem/henderson.hpp"
#include "mixedem/likelihood.hpp"
#include "mixedem/oracle.hpp"
#include "test_support.hpp"

using namespace mixedem;
using namespace mixedem::test;

TEST_CASE("marginal covariance of a zero Z is sigma2 I") {
  Vector y(3);
  y << 1, 2, 3;
  Matrix X(3, 1);
  X << 1, 1, 1;
  const ModelData m(y, X, Matrix::Zero(3, 2));
  const MarginalModel mm = marginal(m, VarianceComponents(5.0, 2.0));
  CHECK((mm.V - 2.0 * Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(mm.log_det_V == doctest::Approx(3.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("marginal covariance of the tiny fixture is diagonal") {
  const ModelData m = tiny_model();
  const MarginalModel mm = marginal(m, VarianceComponents(1.0, 1.0));
  Matrix expected(2, 2);
  expected << 2, 0, 0, 1;
  CHECK((mm.V - expected).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(mm.log_det_V == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("marginal covariance matches the dense oracle") {
  const ModelData m = random_instance(3, 10, 2, 3, false);
  NormalSampler rng(4);
  const VarianceComponents vc = random_vc(rng);
  const MarginalModel mm = marginal(m, vc);
  CHECK(rel_err(mm.V, dense_v_oracle(m, vc)) < 1e-12);
  // log_det agrees with the Cholesky diagonal identity
  const Matrix L = mm.llt.matrixL();
  CHECK(std::abs(mm.log_det_V -
                 2.0 * L.diagonal().array().log().sum()) < 1e-10);
}

TEST_CASE("gls_beta with V = I is ordinary least squares") {
  const ModelData m = random_instance(9, 12, 3, 0);
  // tau2 tiny and no Z columns: V = sigma2 I; any sigma2 gives OLS
  const MarginalModel mm = marginal(m, VarianceComponents(1.0, 1.0));
  const Vector gls = gls_beta(m, mm);
  const Vector ols = m.X().colPivHouseholderQr().solve(m.y());
  CHECK(rel_err(gls, ols) < 1e-10);
}

TEST_CASE("gls_beta on the tiny fixture is the precision-weighted average") {
  const ModelData m = tiny_model();
  const MarginalModel mm = marginal(m, VarianceComponents(1.0, 1.0));
  const Vector beta = gls_beta(m, mm);
  CHECK(beta[0] == doctest::Approx(5.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("gls_beta agrees with the Henderson BLUE") {
  for (std::uint64_t seed : {15u, 16u, 17u}) {
    const ModelData m = random_instance(seed, 14, 3, 4);
    NormalSampler rng(seed ^ 0xff);
    const VarianceComponents vc = random_vc(rng);
    const Vector beta = gls_beta(m, marginal(m, vc));
    const HendersonSolution sol = solve(assemble(m, vc), m);
    CHECK(rel_err(beta, sol.beta_hat) < 1e-8);
  }
}

TEST_CASE("loglik_ml at a single standard-normal point") {
  Vector y(1);
  y << 0.0;
  Matrix X(1, 1);
  X << 1.0;
  const ModelData m(y, X, Matrix::Zero(1, 1));
  Vector beta(1);
  beta << 0.0;
  // V = [1]: tau2 zero-Z column contributes nothing with Z = 0
  const VarianceComponents vc(1.0, 1.0);
  const ModelData m1(y, X, Matrix::Zero(1, 1));
  const double ll0 = loglik_ml(m1, beta, vc);
  CHECK(ll0 == doctest::Approx(-0.9189385332046727).epsilon(1e-9));
  Vector y1(1);
  y1 << 1.0;
  const ModelData m2(y1, X, Matrix::Zero(1, 1));
  const double ll1 = loglik_ml(m2, beta, vc);
  CHECK(ll1 == doctest::Approx(-1.4189385332046727).epsilon(1e-9));
}

TEST_CASE("loglik_ml matches the LU-based multivariate normal oracle") {
  const ModelData m = random_instance(23, 10, 2, 3);
  NormalSampler rng(24);
  const VarianceComponents vc = random_vc(rng);
  Vector beta(2);
  beta << 0.4, -1.1;
  const double ll = loglik_ml(m, beta, vc);
  const double oracle =
      mvn_logpdf_oracle(m.y(), m.X() * beta, dense_v_oracle(m, vc));
  CHECK(std::abs(ll - oracle) < 1e-10);
}

TEST_CASE("REML maximizer in sigma2 recovers rss/(n-p) when tau2 is negligible") {
  const ModelData m = random_instance(31, 15, 3, 2);
  const Vector beta = m.X().colPivHouseholderQr().solve(m.y());
  // Remove the random-effect signal from the check: make Z irrelevant by
  // pinning tau2 at a negligible value and profiling sigma2 on a grid.
  const double tau2 = 1e-10;
  const double rss = (m.y() - m.X() * beta).squaredNorm();
  const double target = rss / static_cast<double>(m.n() - m.p());

  double best_s = 0.0, best_f = -1e300;
  double lo = std::log10(target) - 2.0, hi = std::log10(target) + 2.0;
  for (int level = 0; level < 5; ++level) {
    for (int i = 0; i <= 80; ++i) {
      const double s = std::pow(10.0, lo + (hi - lo) * i / 80.0);
      const double f = loglik_reml(m, VarianceComponents(tau2, s));
      if (f > best_f) {
        best_f = f;
        best_s = s;
      }
    }
    const double width = (hi - lo) / 10.0;
    lo = std::log10(best_s) - width / 2.0;
    hi = std::log10(best_s) + width / 2.0;
  }
  CHECK(rel_err(best_s, target) < 1e-4);
}

TEST_CASE("loglik_reml equals the explicit-projection oracle") {
  const ModelData tiny = tiny_model();
  CHECK(std::abs(loglik_reml(tiny, VarianceComponents(1.0, 1.0)) -
                 reml_explicit_p_oracle(tiny, VarianceComponents(1.0, 1.0))) <
        1e-10);
  const ModelData m = random_instance(37, 12, 3, 4);
  NormalSampler rng(38);
  const VarianceComponents vc = random_vc(rng);
  CHECK(std::abs(loglik_reml(m, vc) - reml_explicit_p_oracle(m, vc)) < 1e-10);
}

TEST_CASE("loglik_reml at the minimal degrees of freedom is finite") {
  NormalSampler rng(41);
  const Index n = 4;
  Matrix X(n, 3);
  X.col(0).setOnes();
  for (Index j = 1; j < 3; ++j) {
    for (Index i = 0; i < n; ++i) X(i, j) = rng.normal();
  }
  Vector y(n);
  for (Index i = 0; i < n; ++i) y[i] = rng.normal();
  Matrix Z(n, 1);
  Z << 1, 1, 0, 0;
  const ModelData m(y, X, Z);
  const double ll = loglik_reml(m, VarianceComponents(1.0, 1.0));
  CHECK(std::isfinite(ll));
}

TEST_CASE("loglik_reml requires n > p") {
  Vector y(2);
  y << 1, 2;
  Matrix X = Matrix::Identity(2, 2);
  Matrix Z(2, 1);
  Z << 1, 0;
  const ModelData m(y, X, Z);
  CHECK_THROWS_AS(loglik_reml(m, VarianceComponents(1.0, 1.0)), InvalidArgument);
}

TEST_CASE("REML equals profiled ML plus the information adjustment") {
  for (std::uint64_t seed : {51u, 52u, 53u}) {
    const ModelData m = random_instance(seed, 13, 3, 3);
    NormalSampler rng(seed + 9);
    const VarianceComponents vc = random_vc(rng);
    const MarginalModel mm = marginal(m, vc);
    const Vector beta = gls_beta(m, mm);
    const Matrix vinv_x = mm.llt.solve(m.X());
    const Matrix xt_vinv_x = m.X().transpose() * vinv_x;
    const double log_det_x =
        std::log(Eigen::FullPivLU<Matrix>(xt_vinv_x).determinant());
    const double lhs = loglik_reml(m, mm);
    const double rhs = loglik_ml(m, mm, beta) - 0.5 * log_det_x +
                       0.5 * static_cast<double>(m.p()) *
                           std::log(2.0 * M_PI);
    CHECK(std::abs(lhs - rhs) < 1e-10);
  }
}

TEST_CASE("log-likelihoods are invariant to permuting the observations") {
  const ModelData m = random_instance(57, 11, 2, 3);
  std::vector<Index> perm(static_cast<std::size_t>(m.n()));
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::swap(perm[2], perm[7]);
  Vector y(m.n());
  Matrix X(m.n(), m.p());
  Matrix Z(m.n(), m.q());
  for (Index i = 0; i < m.n(); ++i) {
    y[i] = m.y()[perm[static_cast<std::size_t>(i)]];
    X.row(i) = m.X().row(perm[static_cast<std::size_t>(i)]);
    Z.row(i) = m.Z().row(perm[static_cast<std::size_t>(i)]);
  }
  const ModelData shuffled(y, X, Z);
  const VarianceComponents vc(0.7, 1.9);
  Vector beta(2);
  beta << 0.5, 0.2;
  CHECK(std::abs(loglik_ml(m, beta, vc) - loglik_ml(shuffled, beta, vc)) < 1e-10);
  CHECK(std::abs(loglik_reml(m, vc) - loglik_reml(shuffled, vc)) < 1e-10);
}

TEST_CASE("fd_score validates its step size") {
  const ModelData m = tiny_model();
  const VarianceComponents vc(1.0, 1.0);
  CHECK_THROWS_AS(fd_score(m, vc, Criterion::ML, 0.0), InvalidArgument);
  CHECK_THROWS_AS(fd_score(m, vc, Criterion::ML, 0.5), InvalidArgument);
}

TEST_CASE("fd_score vanishes at an oracle maximizer") {
  SimulationSpec spec;
  spec.group_sizes = std::vector<int>(6, 5);
  spec.beta_true = Vector(3);
  spec.beta_true << 2.0, 1.0, -0.5;
  spec.std_normal_covariates = 2;
  spec.seed = 20240131;
  const SimulationResult sim = simulate(spec);
  for (Criterion crit : {Criterion::ML, Criterion::REML}) {
    const OracleResult oracle = maximize(sim.data, crit);
    CHECK(fd_score(sim.data, oracle.vc_star, crit, 1e-5).norm() < 1e-4);
  }
}

TEST_CASE("fd_score is large away from the optimum") {
  SimulationSpec spec;
  spec.group_sizes = std::vector<int>(6, 5);
  spec.beta_true = Vector(3);
  spec.beta_true << 2.0, 1.0, -0.5;
  spec.std_normal_covariates = 2;
  spec.seed = 20240131;
  const SimulationResult sim = simulate(spec);
  const VarianceComponents far(100.0, 1.0);
  CHECK(fd_score(sim.data, far, Criterion::ML, 1e-5).norm() > 1e-2);
  CHECK(fd_score(sim.data, far, Criterion::REML, 1e-5).norm() > 1e-2);
}

TEST_CASE("fd_score error shrinks quadratically with the step") {
  const ModelData m = random_instance(61, 14, 2, 3);
  const VarianceComponents vc(0.5, 1.5);
  const Eigen::Vector2d ref = fd_score(m, vc, Criterion::REML, 1e-6 / 8.0);
  const Eigen::Vector2d g1 = fd_score(m, vc, Criterion::REML, 1e-3);
  const Eigen::Vector2d g2 = fd_score(m, vc, Criterion::REML, 5e-4);
  const double e1 = (g1 - ref).norm();
  const double e2 = (g2 - ref).norm();
  CHECK(e2 <= e1 / 2.0);  // central differences: expect roughly e1/4
}
