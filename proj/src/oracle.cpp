#include "mixedem/oracle.hpp"

#include <cmath>
#include <limits>

#include "mixedem/likelihood.hpp"

namespace mixedem {

namespace {

constexpr int kGridPoints = 41;
constexpr double kShrinkFactor = 10.0;
// On flat objectives the coarse-level argmax can sit several grid steps from
// the true peak, so a box is re-centered ("panned") at the same size while
// the best point keeps landing on its edge, and only shrunk once the best is
// interior. The pan budget bounds the total work; each pan moves half a box
// side, so 64 crosses the widest sensible bounds many times over.
constexpr int kMaxPans = 64;

struct LogBox {
  double t_lo, t_hi, s_lo, s_hi;

  bool operator==(const LogBox&) const = default;
};

LogBox recenter(const LogBox& outer, double side_t, double side_s,
                double center_t, double center_s) {
  LogBox out;
  out.t_lo = std::min(std::max(center_t - side_t / 2.0, outer.t_lo),
                      outer.t_hi - side_t);
  out.t_hi = out.t_lo + side_t;
  out.s_lo = std::min(std::max(center_s - side_s / 2.0, outer.s_lo),
                      outer.s_hi - side_s);
  out.s_hi = out.s_lo + side_s;
  return out;
}

}  // namespace

OracleResult maximize(const ModelData& model, Criterion criterion,
                      const SearchBounds& bounds, int levels) {
  if (levels < 1) throw InvalidArgument("levels must be >= 1");
  if (!(bounds.tau2_lo > 0.0) || !(bounds.sigma2_lo > 0.0) ||
      !(bounds.tau2_lo < bounds.tau2_hi) ||
      !(bounds.sigma2_lo < bounds.sigma2_hi)) {
    throw InvalidArgument("search bounds must satisfy 0 < lo < hi per axis");
  }

  const LogBox outer{std::log10(bounds.tau2_lo), std::log10(bounds.tau2_hi),
                     std::log10(bounds.sigma2_lo), std::log10(bounds.sigma2_hi)};
  LogBox box = outer;

  double best_t = outer.t_lo;
  double best_s = outer.s_lo;
  double best_f = -std::numeric_limits<double>::infinity();
  long evaluations = 0;
  std::vector<RefineBox> trace;

  int shrinks_remaining = levels - 1;
  int pans_remaining = kMaxPans;
  for (;;) {
    trace.push_back(RefineBox{std::pow(10.0, box.t_lo), std::pow(10.0, box.t_hi),
                              std::pow(10.0, box.s_lo), std::pow(10.0, box.s_hi)});
    const double dt = (box.t_hi - box.t_lo) / (kGridPoints - 1);
    const double ds = (box.s_hi - box.s_lo) / (kGridPoints - 1);
    for (int i = 0; i < kGridPoints; ++i) {
      const double lt = box.t_lo + i * dt;
      for (int j = 0; j < kGridPoints; ++j) {
        const double ls = box.s_lo + j * ds;
        const double f = criterion_objective(
            model, VarianceComponents(std::pow(10.0, lt), std::pow(10.0, ls)),
            criterion);
        ++evaluations;
        if (f > best_f) {
          best_f = f;
          best_t = lt;
          best_s = ls;
        }
      }
    }

    // Pan while the running best sits on this box's rim: the peak likely
    // lies outside, and shrinking now would trap the search. The best is
    // always inside the current box, so edge tests need only a fraction of
    // one grid step of slack.
    const bool on_edge = best_t < box.t_lo + 0.25 * dt ||
                         best_t > box.t_hi - 0.25 * dt ||
                         best_s < box.s_lo + 0.25 * ds ||
                         best_s > box.s_hi - 0.25 * ds;
    if (on_edge && pans_remaining > 0) {
      const LogBox panned = recenter(outer, box.t_hi - box.t_lo,
                                     box.s_hi - box.s_lo, best_t, best_s);
      if (!(panned == box)) {
        box = panned;
        --pans_remaining;
        continue;
      }
    }
    if (shrinks_remaining == 0) break;
    box = recenter(outer, (box.t_hi - box.t_lo) / kShrinkFactor,
                   (box.s_hi - box.s_lo) / kShrinkFactor, best_t, best_s);
    --shrinks_remaining;
  }

  const double edge_tol = 1e-12;
  std::string edge;
  if (best_t <= outer.t_lo + edge_tol) edge += "tau2 at lower bound; ";
  if (best_t >= outer.t_hi - edge_tol) edge += "tau2 at upper bound; ";
  if (best_s <= outer.s_lo + edge_tol) edge += "sigma2 at lower bound; ";
  if (best_s >= outer.s_hi - edge_tol) edge += "sigma2 at upper bound; ";
  if (!edge.empty()) edge.erase(edge.size() - 2);

  VarianceComponents vc_star(std::pow(10.0, best_t), std::pow(10.0, best_s));
  OracleResult result{vc_star,
                      best_f,
                      criterion,
                      gls_beta(model, marginal(model, vc_star)),
                      evaluations,
                      std::move(trace),
                      !edge.empty(),
                      std::move(edge)};
  return result;
}

}  // namespace mixedem
