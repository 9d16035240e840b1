#ifndef MIXEDEM_SIMULATE_HPP
#define MIXEDEM_SIMULATE_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mixedem/model.hpp"

namespace mixedem {

/// Deterministic normal sampler: mt19937_64 (bit-exact per the C++ standard)
/// feeding an explicit Box-Muller transform. std::normal_distribution is
/// implementation-defined, so it is not used here.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : gen_(seed) {}

  /// Uniform draw in [0, 1) from the top 53 bits.
  double uniform();

  /// Standard normal draw.
  double normal();

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Recipe for a simulated one-way random-effects data set.
/// X has an intercept column followed by i.i.d. standard-normal covariates;
/// Z is the group-membership indicator implied by group_sizes.
struct SimulationSpec {
  std::vector<int> group_sizes;     // one entry per group, each >= 1
  Vector beta_true;                 // length p = 1 + std_normal_covariates
  double tau2_true = 1.0;
  double sigma2_true = 1.0;
  std::uint64_t seed = 0;
  int std_normal_covariates = 0;    // covariate columns beyond the intercept
};

/// Simulated data plus the latent draws, kept for test introspection.
struct SimulationResult {
  ModelData data;
  std::vector<std::string> labels;  // g1, g2, ... per row
  Vector eta;                       // random-effect draws, length q
  Vector eps;                       // residual draws, length n
};

/// Throws InvalidArgument if the spec violates its invariants.
void validate_spec(const SimulationSpec& spec);

/// Draws y = X beta + Z eta + eps. Pure function of the spec: a fixed seed
/// reproduces the result bit for bit. Draw order is pinned (covariate
/// columns left to right, then eta, then eps).
SimulationResult simulate(const SimulationSpec& spec);

}  // namespace mixedem

#endif  // MIXEDEM_SIMULATE_HPP
