#ifndef MIXEDEM_VALIDATE_HPP
#define MIXEDEM_VALIDATE_HPP

#include "mixedem/em.hpp"
#include "mixedem/oracle.hpp"

namespace mixedem {

/// Side-by-side validation of an EM fit against the oracle: one row per
/// method with beta, tau^2, sigma^2, and log-likelihood, plus relative
/// discrepancies.
struct ValidationReport {
  Criterion criterion = Criterion::ML;
  Vector beta_fit, beta_oracle;
  double tau2_fit = 0, tau2_oracle = 0;
  double sigma2_fit = 0, sigma2_oracle = 0;
  double loglik_fit = 0, loglik_oracle = 0;
  double rel_tau2 = 0, rel_sigma2 = 0, rel_beta_max = 0, rel_loglik = 0;
  double loglik_deficit = 0;    // oracle - fit; positive means EM fell short
  bool oracle_boundary_hit = false;
  bool pass = false;
};

/// PASS iff every relative discrepancy is below 1e-3 and the fit's
/// log-likelihood is within 1e-6 of the oracle's from below. Refuses to
/// compare across criteria (CriterionMismatch): ML and REML log-likelihoods
/// live on different scales.
ValidationReport compare(const FitResult& fit, const OracleResult& oracle);

}  // namespace mixedem

#endif  // MIXEDEM_VALIDATE_HPP
