#include "mixedem/validate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mixedem {

namespace {

constexpr double kCompareRelTol = 1e-3;
constexpr double kLoglikSlack = 1e-6;

double rel_diff(double value, double reference) {
  return std::abs(value - reference) / std::max(std::abs(reference), 1e-12);
}

}  // namespace

ValidationReport compare(const FitResult& fit, const OracleResult& oracle) {
  if (fit.criterion != oracle.criterion) {
    throw CriterionMismatch(
        std::string("cannot compare a ") + to_string(fit.criterion) +
        " fit against a " + to_string(oracle.criterion) +
        " oracle; the log-likelihoods are on different scales");
  }
  if (fit.beta_hat.size() != oracle.beta_star.size()) {
    throw DimensionMismatch("fit and oracle come from different models");
  }

  ValidationReport rep;
  rep.criterion = fit.criterion;
  rep.beta_fit = fit.beta_hat;
  rep.beta_oracle = oracle.beta_star;
  rep.tau2_fit = fit.vc.tau2();
  rep.tau2_oracle = oracle.vc_star.tau2();
  rep.sigma2_fit = fit.vc.sigma2();
  rep.sigma2_oracle = oracle.vc_star.sigma2();
  rep.loglik_fit = fit.loglik;
  rep.loglik_oracle = oracle.loglik_star;
  rep.oracle_boundary_hit = oracle.boundary_hit;

  rep.rel_tau2 = rel_diff(rep.tau2_fit, rep.tau2_oracle);
  rep.rel_sigma2 = rel_diff(rep.sigma2_fit, rep.sigma2_oracle);
  rep.rel_beta_max = 0.0;
  for (Index i = 0; i < rep.beta_fit.size(); ++i) {
    rep.rel_beta_max =
        std::max(rep.rel_beta_max, rel_diff(rep.beta_fit[i], rep.beta_oracle[i]));
  }
  rep.rel_loglik = rel_diff(rep.loglik_fit, rep.loglik_oracle);
  rep.loglik_deficit = rep.loglik_oracle - rep.loglik_fit;

  rep.pass = rep.rel_tau2 < kCompareRelTol && rep.rel_sigma2 < kCompareRelTol &&
             rep.rel_beta_max < kCompareRelTol &&
             rep.rel_loglik < kCompareRelTol &&
             rep.loglik_fit >= rep.loglik_oracle - kLoglikSlack;
  return rep;
}

}  // namespace mixedem
