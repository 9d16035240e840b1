#ifndef MIXEDEM_LIKELIHOOD_HPP
#define MIXEDEM_LIKELIHOOD_HPP

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "mixedem/model.hpp"

namespace mixedem {

/// Marginal covariance of y: V = tau^2 Z Z' + sigma^2 I, with its Cholesky
/// factor and log-determinant. Dense n x n; fine at desk scale.
struct MarginalModel {
  Matrix V;
  Eigen::LLT<Matrix> llt;
  double log_det_V = 0.0;
};

/// Factorizes V at the given variance components. Throws NumericalFailure
/// if the factorization breaks down.
MarginalModel marginal(const ModelData& model, const VarianceComponents& vc);

/// Generalized least squares estimator (X'V^{-1}X)^{-1} X'V^{-1} y via
/// factorized solves. The independent route to the BLUE used for
/// cross-checks and for profiling the ML objective.
Vector gls_beta(const ModelData& model, const MarginalModel& mm);

/// ML log-likelihood -1/2 { log|V| + (y-Xb)'V^{-1}(y-Xb) + n log 2pi }.
double loglik_ml(const ModelData& model, const MarginalModel& mm,
                 const Vector& beta);
double loglik_ml(const ModelData& model, const Vector& beta,
                 const VarianceComponents& vc);

/// REML log-likelihood
///   -1/2 { log|V| + log|X'V^{-1}X| + y'Py + (n-p) log 2pi },
/// where y'Py is evaluated as (y-Xb)'V^{-1}(y-Xb) at the GLS b — the
/// algebraically equal form that avoids materializing the projection P.
/// Requires n > p.
double loglik_reml(const ModelData& model, const MarginalModel& mm);
double loglik_reml(const ModelData& model, const VarianceComponents& vc);

/// The objective a criterion maximizes over (tau^2, sigma^2): the ML
/// log-likelihood profiled at the GLS beta, or the REML log-likelihood.
double criterion_objective(const ModelData& model, const VarianceComponents& vc,
                           Criterion criterion);

/// Central finite differences of the criterion objective in (tau^2, sigma^2),
/// with step rel_step relative to each component. rel_step must lie in
/// (0, 1e-2]. Stationarity diagnostic for converged fits.
Eigen::Vector2d fd_score(const ModelData& model, const VarianceComponents& vc,
                         Criterion criterion, double rel_step);

}  // namespace mixedem

#endif  // MIXEDEM_LIKELIHOOD_HPP
