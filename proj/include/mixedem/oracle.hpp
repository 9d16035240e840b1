#ifndef MIXEDEM_ORACLE_HPP
#define MIXEDEM_ORACLE_HPP

#include <string>
#include <vector>

#include "mixedem/model.hpp"

namespace mixedem {

// Brute-force maximizer of the (RE)ML objective. Deliberately built on the
// likelihood module alone — no Henderson solves, no EM — so it can serve as
// an algorithmically independent reference for the EM fit.

/// Log-space search box for (tau^2, sigma^2).
struct SearchBounds {
  double tau2_lo = 1e-4;
  double tau2_hi = 1e4;
  double sigma2_lo = 1e-4;
  double sigma2_hi = 1e4;
};

/// One refinement level's box, recorded for inspection.
struct RefineBox {
  double tau2_lo, tau2_hi, sigma2_lo, sigma2_hi;
};

struct OracleResult {
  VarianceComponents vc_star;   // best grid point found
  double loglik_star = 0.0;
  Criterion criterion = Criterion::ML;
  Vector beta_star;             // GLS beta at vc_star
  long evaluations = 0;         // objective calls
  std::vector<RefineBox> grid_trace;
  bool boundary_hit = false;    // best point on the outer box edge at the
                                // final level: the optimum may sit at a
                                // variance boundary or outside the bounds
  std::string boundary_edge;    // which edge(s), for reporting
};

/// Evaluates the objective on a 41 x 41 log10-spaced grid over the box,
/// recenters a box shrunk by a factor 10 per side on the best point, and
/// repeats `levels` times (the refined box is clamped inside the outer
/// bounds). While the running best sits on the current box edge the box is
/// panned at the same size instead of shrunk, so flat objectives whose
/// coarse-level argmax lands a few grid steps off cannot trap the
/// refinement away from the peak. Deterministic; increasing `levels` never
/// lowers loglik_star.
OracleResult maximize(const ModelData& model, Criterion criterion,
                      const SearchBounds& bounds = {}, int levels = 6);

}  // namespace mixedem

#endif  // MIXEDEM_ORACLE_HPP
