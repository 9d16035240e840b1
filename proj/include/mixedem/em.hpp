#ifndef MIXEDEM_EM_HPP
#define MIXEDEM_EM_HPP

#include <utility>
#include <vector>

#include "mixedem/henderson.hpp"
#include "mixedem/model.hpp"

namespace mixedem {

/// Iteration controls for the EM fit.
struct EmConfig {
  Criterion criterion = Criterion::ML;
  int maxit = 100;
  double tol = 1e-7;
  double tau2_init = 1.0;
  double sigma2_init = 1.0;
  bool trace_loglik = false;  // evaluate the objective at every iterate
};

/// Per-iteration M-step ingredients.
struct EmStepDiagnostics {
  double trace_T_tau = 0.0;    // tr of the tau^2 adjustment matrix
  double trace_T_sigma = 0.0;  // tr of the sigma^2 adjustment matrix
  double rss = 0.0;            // r_hat' r_hat
  double eta_ss = 0.0;         // eta_hat' eta_hat
};

/// How the trace adjustments are evaluated. Contracted never forms an
/// n x n matrix: tr{Z A Z'} = sum_ij (Z'Z)_ij A_ji, and likewise with
/// [X Z] for the REML residual adjustment. Dense forms the products
/// literally and exists to cross-check the contraction.
enum class TraceMode { kContracted, kDense };

/// Trace terms of the variance-component updates at the current solution:
///   ML:    ( tr{(M_etaeta)^{-1}},  tr{Z (M_etaeta)^{-1} Z'} )
///   REML:  ( tr{C_etaeta},         tr{[X Z] C [X Z]'}       )
std::pair<double, double> trace_adjustments(
    Criterion criterion, const HendersonSolution& sol, const ModelData& model,
    TraceMode mode = TraceMode::kContracted);

struct EmStepResult {
  VarianceComponents vc;       // updated components
  HendersonSolution solution;  // solve at the pre-update components
  EmStepDiagnostics diagnostics;
};

/// One EM cycle: Henderson solve at the current components, then
///   tau2  <- (eta_ss + trace_T_tau)   / q
///   sigma2<- (rss    + trace_T_sigma) / n
/// Both updates are strictly positive by construction. The solve itself is
/// criterion-free; only the trace terms differ between ML and REML.
EmStepResult em_step(const ModelData& model, const VarianceComponents& vc,
                     Criterion criterion);

struct FitHistoryEntry {
  VarianceComponents vc;
  EmStepDiagnostics diagnostics;
};

struct FitResult {
  Vector beta_hat;
  Vector eta_hat;
  VarianceComponents vc;   // final components
  Criterion criterion;
  int iterations = 0;
  bool converged = false;
  bool boundary_approached = false;  // an iterate fell below kVarianceFloor
  double loglik = 0.0;               // objective at vc, tagged by criterion
  std::vector<FitHistoryEntry> history;    // one entry per iteration
  std::vector<double> loglik_trace;        // objective at theta_0, theta_1, ...
                                           // (only when trace_loglik set)
  HendersonSolution solution;              // from the last executed step
};

/// Runs em_step until the relative change
///   max( |s2_new - s2| / (s2 + 1e-8), |t2_new - t2| / (t2 + 1e-8) )
/// drops below tol, or maxit is reached. Non-convergence is reported via
/// the flag, never thrown; the per-iteration history is always returned.
/// The log-likelihood is evaluated once at the final components (per
/// iterate as well when trace_loglik is set).
FitResult fit(const ModelData& model, const EmConfig& config);

/// No-random-effects reduction (q = 0): returns the ordinary least squares
/// residual variance r'r / (n - p), the fixed point the scalar REML
/// iteration sigma2 <- r'r/n + (p/n) sigma2 contracts to. Requires n > p.
double ols_fixed_point(const ModelData& model);

struct OlsIterationResult {
  double sigma2 = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Runs the scalar REML iteration above to tolerance; used to demonstrate
/// agreement with ols_fixed_point.
OlsIterationResult ols_reml_iteration(const ModelData& model,
                                      double sigma2_init = 1.0,
                                      double tol = 1e-13, int maxit = 100000);

}  // namespace mixedem

#endif  // MIXEDEM_EM_HPP
