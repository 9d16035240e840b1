#include "mixedem/henderson.hpp"

#include <string>

namespace mixedem {

Matrix spd_inverse(const Matrix& A, const char* what) {
  Eigen::LLT<Matrix> llt(A);
  if (llt.info() != Eigen::Success) {
    throw NumericalFailure(std::string(what) +
                           " is not positive definite (Cholesky failed)");
  }
  Matrix inv = llt.solve(Matrix::Identity(A.rows(), A.cols()));
  return 0.5 * (inv + inv.transpose()).eval();
}

HendersonSystem assemble(const ModelData& model, const VarianceComponents& vc) {
  if (model.q() == 0) {
    throw InvalidArgument(
        "Henderson assembly needs q >= 1; use ols_fixed_point when there are "
        "no random effects");
  }
  if (vc.tau2() < kVarianceFloor || vc.sigma2() < kVarianceFloor) {
    throw NumericalFailure("variance component below " +
                           std::to_string(kVarianceFloor) +
                           "; G^{-1} or R^{-1} would be numerically singular");
  }
  const Index p = model.p();
  const Index q = model.q();
  const double rinv = 1.0 / vc.sigma2();
  const double ginv = 1.0 / vc.tau2();
  const Matrix& X = model.X();
  const Matrix& Z = model.Z();

  // R^{-1} and G^{-1} enter as scalars; the identities are never formed.
  HendersonSystem sys;
  sys.p = p;
  sys.q = q;
  sys.M.resize(p + q, p + q);
  sys.M.topLeftCorner(p, p) = rinv * (X.transpose() * X);
  sys.M.topRightCorner(p, q) = rinv * (X.transpose() * Z);
  sys.M.bottomLeftCorner(q, p) = sys.M.topRightCorner(p, q).transpose();
  sys.M.bottomRightCorner(q, q) = rinv * (Z.transpose() * Z);
  sys.M.bottomRightCorner(q, q).diagonal().array() += ginv;

  sys.rhs.resize(p + q);
  sys.rhs.head(p) = rinv * (X.transpose() * model.y());
  sys.rhs.tail(q) = rinv * (Z.transpose() * model.y());

  sys.llt.compute(sys.M);
  if (sys.llt.info() != Eigen::Success) {
    throw NumericalFailure("mixed-model matrix M is not positive definite");
  }
  return sys;
}

HendersonSolution solve(const HendersonSystem& sys, const ModelData& model) {
  if (sys.p != model.p() || sys.q != model.q()) {
    throw DimensionMismatch("system was not assembled from this model");
  }
  const Index p = sys.p;
  const Index q = sys.q;

  HendersonSolution sol;
  sol.p = p;
  sol.q = q;

  // C = M^{-1} from the Cholesky factor (the chol2inv route), symmetrized.
  Matrix C = sys.llt.solve(Matrix::Identity(p + q, p + q));
  sol.C = 0.5 * (C + C.transpose()).eval();

  Vector joint = sol.C * sys.rhs;
  sol.beta_hat = joint.head(p);
  sol.eta_hat = joint.tail(q);
  sol.r_hat = model.y() - model.X() * sol.beta_hat - model.Z() * sol.eta_hat;

  sol.M_etaeta_inv = spd_inverse(sys.m_etaeta(), "M_etaeta");
  return sol;
}

Matrix schur_c_etaeta(const HendersonSystem& sys) {
  Eigen::LLT<Matrix> llt_bb(Matrix(sys.m_betabeta()));
  if (llt_bb.info() != Eigen::Success) {
    throw NumericalFailure("M_betabeta is not positive definite");
  }
  const Matrix cross = sys.m_betaeta();
  Matrix schur = sys.m_etaeta() - cross.transpose() * llt_bb.solve(cross);
  schur = 0.5 * (schur + schur.transpose()).eval();
  return spd_inverse(schur, "Schur complement of M_betabeta");
}

}  // namespace mixedem
