#include "mixedem/likelihood.hpp"

#include <cmath>

namespace mixedem {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

MarginalModel marginal(const ModelData& model, const VarianceComponents& vc) {
  MarginalModel mm;
  mm.V = vc.tau2() * (model.Z() * model.Z().transpose());
  mm.V.diagonal().array() += vc.sigma2();
  mm.llt.compute(mm.V);
  if (mm.llt.info() != Eigen::Success) {
    throw NumericalFailure("marginal covariance V is not positive definite");
  }
  mm.log_det_V = 2.0 * mm.llt.matrixLLT().diagonal().array().log().sum();
  return mm;
}

Vector gls_beta(const ModelData& model, const MarginalModel& mm) {
  if (mm.V.rows() != model.n()) {
    throw DimensionMismatch("marginal model does not match the data");
  }
  const Matrix vinv_x = mm.llt.solve(model.X());
  Matrix xt_vinv_x = model.X().transpose() * vinv_x;
  xt_vinv_x = 0.5 * (xt_vinv_x + xt_vinv_x.transpose()).eval();
  Eigen::LLT<Matrix> llt(xt_vinv_x);
  if (llt.info() != Eigen::Success) {
    throw NumericalFailure("X'V^{-1}X is not positive definite");
  }
  return llt.solve(vinv_x.transpose() * model.y());
}

double loglik_ml(const ModelData& model, const MarginalModel& mm,
                 const Vector& beta) {
  if (mm.V.rows() != model.n()) {
    throw DimensionMismatch("marginal model does not match the data");
  }
  if (beta.size() != model.p()) {
    throw DimensionMismatch("beta has length " + std::to_string(beta.size()) +
                            ", expected p = " + std::to_string(model.p()));
  }
  const Vector resid = model.y() - model.X() * beta;
  const double quad = resid.dot(mm.llt.solve(resid));
  return -0.5 * (mm.log_det_V + quad +
                 static_cast<double>(model.n()) * kLog2Pi);
}

double loglik_ml(const ModelData& model, const Vector& beta,
                 const VarianceComponents& vc) {
  return loglik_ml(model, marginal(model, vc), beta);
}

double loglik_reml(const ModelData& model, const MarginalModel& mm) {
  const Index n = model.n();
  const Index p = model.p();
  if (n <= p) {
    throw InvalidArgument("REML needs n > p, got n = " + std::to_string(n) +
                          ", p = " + std::to_string(p));
  }
  const Matrix vinv_x = mm.llt.solve(model.X());
  Matrix xt_vinv_x = model.X().transpose() * vinv_x;
  xt_vinv_x = 0.5 * (xt_vinv_x + xt_vinv_x.transpose()).eval();
  Eigen::LLT<Matrix> llt(xt_vinv_x);
  if (llt.info() != Eigen::Success) {
    throw NumericalFailure("X'V^{-1}X is not positive definite");
  }
  const double log_det_xvx =
      2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const Vector beta = llt.solve(vinv_x.transpose() * model.y());
  // y'Py equals the GLS residual quadratic form; P itself is never built.
  const Vector resid = model.y() - model.X() * beta;
  const double quad = resid.dot(mm.llt.solve(resid));
  return -0.5 * (mm.log_det_V + log_det_xvx + quad +
                 static_cast<double>(n - p) * kLog2Pi);
}

double loglik_reml(const ModelData& model, const VarianceComponents& vc) {
  return loglik_reml(model, marginal(model, vc));
}

double criterion_objective(const ModelData& model, const VarianceComponents& vc,
                           Criterion criterion) {
  const MarginalModel mm = marginal(model, vc);
  if (criterion == Criterion::ML) {
    return loglik_ml(model, mm, gls_beta(model, mm));
  }
  return loglik_reml(model, mm);
}

Eigen::Vector2d fd_score(const ModelData& model, const VarianceComponents& vc,
                         Criterion criterion, double rel_step) {
  if (!(rel_step > 0.0) || rel_step > 1e-2) {
    throw InvalidArgument("rel_step must lie in (0, 1e-2]");
  }
  const double t2 = vc.tau2();
  const double s2 = vc.sigma2();
  const auto eval = [&](double tau2, double sigma2) {
    return criterion_objective(model, VarianceComponents(tau2, sigma2),
                               criterion);
  };
  Eigen::Vector2d g;
  g[0] = (eval(t2 * (1.0 + rel_step), s2) - eval(t2 * (1.0 - rel_step), s2)) /
         (2.0 * t2 * rel_step);
  g[1] = (eval(t2, s2 * (1.0 + rel_step)) - eval(t2, s2 * (1.0 - rel_step))) /
         (2.0 * s2 * rel_step);
  return g;
}

}  // namespace mixedem
