#include "mixedem/em.hpp"

#include <cmath>
#include <utility>

#include "mixedem/likelihood.hpp"

namespace mixedem {

namespace {

void validate_config(const EmConfig& config) {
  if (config.maxit < 1) throw InvalidArgument("maxit must be >= 1");
  if (!(config.tol > 0.0)) throw InvalidArgument("tol must be > 0");
  if (!(config.tau2_init > 0.0) || !(config.sigma2_init > 0.0)) {
    throw InvalidArgument("initial variance components must be > 0");
  }
}

// Relative change with the +1e-8 guard, exactly as in the reference fit.
double relative_change(const VarianceComponents& from,
                       const VarianceComponents& to) {
  return std::max(
      std::abs(to.sigma2() - from.sigma2()) / (from.sigma2() + 1e-8),
      std::abs(to.tau2() - from.tau2()) / (from.tau2() + 1e-8));
}

}  // namespace

std::pair<double, double> trace_adjustments(Criterion criterion,
                                            const HendersonSolution& sol,
                                            const ModelData& model,
                                            TraceMode mode) {
  const Matrix& X = model.X();
  const Matrix& Z = model.Z();

  if (criterion == Criterion::ML) {
    const double t_tau = sol.M_etaeta_inv.trace();
    double t_sigma;
    if (mode == TraceMode::kContracted) {
      // tr{Z A Z'} = sum_ij (Z'Z)_ij A_ji; A symmetric.
      t_sigma = (Z.transpose() * Z).cwiseProduct(sol.M_etaeta_inv).sum();
    } else {
      t_sigma = (Z * sol.M_etaeta_inv * Z.transpose()).trace();
    }
    return {t_tau, t_sigma};
  }

  const double t_tau = sol.c_etaeta().trace();
  double t_sigma;
  if (mode == TraceMode::kContracted) {
    const Index p = sol.p;
    const Index q = sol.q;
    Matrix wtw(p + q, p + q);
    wtw.topLeftCorner(p, p) = X.transpose() * X;
    wtw.topRightCorner(p, q) = X.transpose() * Z;
    wtw.bottomLeftCorner(q, p) = wtw.topRightCorner(p, q).transpose();
    wtw.bottomRightCorner(q, q) = Z.transpose() * Z;
    t_sigma = wtw.cwiseProduct(sol.C).sum();
  } else {
    Matrix w(model.n(), sol.p + sol.q);
    w << X, Z;
    t_sigma = (w * sol.C * w.transpose()).trace();
  }
  return {t_tau, t_sigma};
}

EmStepResult em_step(const ModelData& model, const VarianceComponents& vc,
                     Criterion criterion) {
  HendersonSystem sys = assemble(model, vc);
  HendersonSolution sol = solve(sys, model);
  const auto [t_tau, t_sigma] = trace_adjustments(criterion, sol, model);

  const double eta_ss = sol.eta_hat.squaredNorm();
  const double rss = sol.r_hat.squaredNorm();
  VarianceComponents next(
      (eta_ss + t_tau) / static_cast<double>(model.q()),
      (rss + t_sigma) / static_cast<double>(model.n()));
  return EmStepResult{next, std::move(sol),
                      EmStepDiagnostics{t_tau, t_sigma, rss, eta_ss}};
}

FitResult fit(const ModelData& model, const EmConfig& config) {
  validate_config(config);
  if (model.q() == 0) {
    throw InvalidArgument(
        "model has no random effects; use ols_fixed_point instead");
  }
  if (config.criterion == Criterion::REML && model.n() <= model.p()) {
    throw InvalidArgument("REML needs n > p");
  }

  VarianceComponents vc(config.tau2_init, config.sigma2_init);
  std::vector<FitHistoryEntry> history;
  std::vector<double> ll_trace;
  if (config.trace_loglik) {
    ll_trace.push_back(criterion_objective(model, vc, config.criterion));
  }

  bool converged = false;
  bool boundary = false;
  EmStepResult step = em_step(model, vc, config.criterion);
  for (int iter = 1;; ++iter) {
    const double delta = relative_change(vc, step.vc);
    vc = step.vc;
    history.push_back(FitHistoryEntry{vc, step.diagnostics});
    if (config.trace_loglik) {
      ll_trace.push_back(criterion_objective(model, vc, config.criterion));
    }
    // An iterate at the floor would make the next assembly singular; stop
    // and flag it rather than iterate onto the boundary the EM map cannot
    // reach exactly.
    if (vc.tau2() < kVarianceFloor || vc.sigma2() < kVarianceFloor) {
      boundary = true;
      break;
    }
    if (delta < config.tol) {
      converged = true;
      break;
    }
    if (iter == config.maxit) break;
    step = em_step(model, vc, config.criterion);
  }

  FitResult result{
      step.solution.beta_hat,
      step.solution.eta_hat,
      vc,
      config.criterion,
      static_cast<int>(history.size()),
      converged,
      boundary,
      criterion_objective(model, vc, config.criterion),
      std::move(history),
      std::move(ll_trace),
      std::move(step.solution)};
  return result;
}

double ols_fixed_point(const ModelData& model) {
  if (model.q() != 0) {
    throw InvalidArgument("ols_fixed_point applies only when q = 0");
  }
  const Index n = model.n();
  const Index p = model.p();
  if (n <= p) throw InvalidArgument("requires n > p");
  const Vector beta = model.X().colPivHouseholderQr().solve(model.y());
  const double rss = (model.y() - model.X() * beta).squaredNorm();
  return rss / static_cast<double>(n - p);
}

OlsIterationResult ols_reml_iteration(const ModelData& model,
                                      double sigma2_init, double tol,
                                      int maxit) {
  if (model.q() != 0) {
    throw InvalidArgument("ols_reml_iteration applies only when q = 0");
  }
  const Index n = model.n();
  const Index p = model.p();
  if (n <= p) throw InvalidArgument("requires n > p");
  if (!(sigma2_init > 0.0)) throw InvalidArgument("sigma2_init must be > 0");

  const Vector beta = model.X().colPivHouseholderQr().solve(model.y());
  const double rss = (model.y() - model.X() * beta).squaredNorm();
  const double ratio = static_cast<double>(p) / static_cast<double>(n);

  // beta_hat does not depend on sigma2, so the update is the scalar
  // contraction sigma2 <- rss/n + (p/n) sigma2 with fixed point rss/(n-p).
  OlsIterationResult out;
  double sigma2 = sigma2_init;
  for (int iter = 1; iter <= maxit; ++iter) {
    const double next = rss / static_cast<double>(n) + ratio * sigma2;
    const double delta = std::abs(next - sigma2) / (sigma2 + 1e-8);
    sigma2 = next;
    out.iterations = iter;
    if (delta < tol) {
      out.converged = true;
      break;
    }
  }
  out.sigma2 = sigma2;
  return out;
}

}  // namespace mixedem
