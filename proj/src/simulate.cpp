#include "mixedem/simulate.hpp"

#include <cmath>
#include <numeric>

namespace mixedem {

double NormalSampler::uniform() {
  return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double NormalSampler::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller with u1 in (0,1] so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

void validate_spec(const SimulationSpec& spec) {
  if (spec.group_sizes.empty()) throw InvalidArgument("group_sizes is empty");
  for (int size : spec.group_sizes) {
    if (size < 1) throw InvalidArgument("group sizes must be >= 1");
  }
  if (!(spec.tau2_true > 0.0) || !(spec.sigma2_true > 0.0)) {
    throw InvalidArgument("tau2_true and sigma2_true must be > 0");
  }
  if (spec.std_normal_covariates < 0) {
    throw InvalidArgument("std_normal_covariates must be >= 0");
  }
  const Index p = 1 + spec.std_normal_covariates;
  if (spec.beta_true.size() != p) {
    throw InvalidArgument("beta_true has length " +
                          std::to_string(spec.beta_true.size()) +
                          " but intercept + covariates give p = " +
                          std::to_string(p));
  }
}

SimulationResult simulate(const SimulationSpec& spec) {
  validate_spec(spec);
  const Index q = static_cast<Index>(spec.group_sizes.size());
  const Index n = std::accumulate(spec.group_sizes.begin(),
                                  spec.group_sizes.end(), Index{0});
  const Index p = 1 + spec.std_normal_covariates;

  NormalSampler rng(spec.seed);

  // Draw order is part of the contract: covariate columns, then eta, then eps.
  Matrix X(n, p);
  X.col(0).setOnes();
  for (Index j = 1; j < p; ++j) {
    for (Index i = 0; i < n; ++i) X(i, j) = rng.normal();
  }
  Vector eta(q);
  for (Index g = 0; g < q; ++g) eta[g] = std::sqrt(spec.tau2_true) * rng.normal();
  Vector eps(n);
  for (Index i = 0; i < n; ++i) eps[i] = std::sqrt(spec.sigma2_true) * rng.normal();

  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(n));
  for (Index g = 0; g < q; ++g) {
    const std::string label = "g" + std::to_string(g + 1);
    for (int k = 0; k < spec.group_sizes[static_cast<std::size_t>(g)]; ++k) {
      labels.push_back(label);
    }
  }
  Matrix Z = z_from_groups(labels);

  Vector y = X * spec.beta_true + Z * eta + eps;
  return SimulationResult{ModelData(std::move(y), std::move(X), std::move(Z)),
                          std::move(labels), std::move(eta), std::move(eps)};
}

}  // namespace mixedem
