#ifndef MIXEDEM_HENDERSON_HPP
#define MIXEDEM_HENDERSON_HPP

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "mixedem/model.hpp"

namespace mixedem {

/// Henderson's mixed-model equations at fixed variance components:
///
///   M = [ X'X/s2         X'Z/s2        ]      rhs = [ X'y/s2 ]
///       [ Z'X/s2   Z'Z/s2 + I/t2       ]            [ Z'y/s2 ]
///
/// R^{-1} and G^{-1} are applied as scalar factors; no n x n or q x q
/// identity is ever formed. M is factorized at assembly, so a system in
/// hand is known positive definite.
struct HendersonSystem {
  Matrix M;                  // (p+q) x (p+q), symmetric positive definite
  Vector rhs;                // length p+q
  Index p = 0;
  Index q = 0;
  Eigen::LLT<Matrix> llt;    // Cholesky factor of M

  auto m_betabeta() const { return M.topLeftCorner(p, p); }
  auto m_betaeta() const { return M.topRightCorner(p, q); }
  auto m_etabeta() const { return M.bottomLeftCorner(q, p); }
  auto m_etaeta() const { return M.bottomRightCorner(q, q); }
};

/// Joint solution of the mixed-model equations: the BLUE of beta, the BLUP
/// of eta, conditional residuals, and the two covariance matrices that
/// drive the ML-REML contrast.
///
///   C        = M^{-1}: joint sampling covariance of (beta_hat, eta_hat - eta),
///              so C_etaeta is the prediction-error covariance Var(eta_hat - eta).
///   M_etaeta_inv = (Z'R^{-1}Z + G^{-1})^{-1} = Var(eta | y), which does not
///              depend on beta and ignores the cost of estimating it.
struct HendersonSolution {
  Vector beta_hat;           // length p
  Vector eta_hat;            // length q
  Vector r_hat;              // length n, y - X beta_hat - Z eta_hat
  Matrix C;                  // (p+q) x (p+q)
  Matrix M_etaeta_inv;       // q x q
  Index p = 0;
  Index q = 0;

  auto c_betabeta() const { return C.topLeftCorner(p, p); }
  auto c_betaeta() const { return C.topRightCorner(p, q); }
  auto c_etabeta() const { return C.bottomLeftCorner(q, p); }
  auto c_etaeta() const { return C.bottomRightCorner(q, q); }
};

/// Builds M and the right-hand side at the given variance components.
/// Throws NumericalFailure if either component is below kVarianceFloor or
/// if M is not positive definite.
HendersonSystem assemble(const ModelData& model, const VarianceComponents& vc);

/// Solves the equations via the Cholesky factor: [beta;eta] = C rhs with
/// C = M^{-1}, and fills in the covariance blocks.
HendersonSolution solve(const HendersonSystem& system, const ModelData& model);

/// Computes C_etaeta independently as the inverse Schur complement of the
/// fixed-effect block, (M_etaeta - M_etabeta M_betabeta^{-1} M_betaeta)^{-1}.
/// Used to cross-check the block extracted from the full inverse.
Matrix schur_c_etaeta(const HendersonSystem& system);

/// Inverse of a symmetric positive-definite matrix via Cholesky, symmetrized.
/// Throws NumericalFailure on factorization breakdown.
Matrix spd_inverse(const Matrix& A, const char* what);

}  // namespace mixedem

#endif  // MIXEDEM_HENDERSON_HPP
