#ifndef MIXEDEM_IO_HPP
#define MIXEDEM_IO_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mixedem/em.hpp"
#include "mixedem/model.hpp"
#include "mixedem/simulate.hpp"

namespace mixedem {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Numeric encoding. All floating-point values in reports are serialized as
// decimal strings with 17 significant digits, which round-trips IEEE doubles
// bit for bit regardless of the JSON library's number formatting.

std::string format_double(double x);
double parse_double(const std::string& s);

json num_to_json(double x);
double num_from_json(const json& j);
json vec_to_json(const Vector& v);
Vector vec_from_json(const json& j);
json mat_to_json(const Matrix& m);

/// FNV-1a 64-bit hash, used as the input-file digest in reports.
std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t fnv1a64_file(const std::string& path);

// ---------------------------------------------------------------------------
// CSV. RFC-4180-style: header row required, quoted fields with "" escapes,
// LF / CRLF line endings.

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a named column, or nullopt.
  std::optional<std::size_t> column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text);

/// Column selection for turning a CSV into model matrices.
struct DesignOptions {
  bool intercept = true;                  // prepend a column of ones to X
  std::vector<std::string> design_cols;   // explicit X columns; empty = auto x1..xk
  std::vector<std::string> z_cols;        // explicit Z columns; empty = grp indicator
};

struct Dataset {
  ModelData data;
  std::vector<std::string> group_labels;  // empty when Z came from explicit columns
};

/// Builds (y, X, Z) from a parsed CSV. The default layout expects columns
/// y, x1..xk, grp; explicit column lists override either side. Throws Error
/// subclasses on malformed input.
Dataset dataset_from_csv(const CsvTable& csv, const DesignOptions& opts);

/// Debug re-emission of the ingested design, exact to the bit.
json design_to_json(const ModelData& data);

// ---------------------------------------------------------------------------
// Simulation spec + outputs.

/// Parses a SimulationSpec from JSON with fields n_groups, group_sizes,
/// beta_true, tau2_true, sigma2_true, seed, covariate_spec and optional n.
SimulationSpec spec_from_json(const json& j);
json spec_to_json(const SimulationSpec& spec);

/// CSV with header y,x1,...,x{p-1},grp (intercept implicit).
std::string simulation_to_csv(const SimulationResult& sim);

/// Sidecar truth record: the spec plus the latent draws.
json truth_to_json(const SimulationSpec& spec, const SimulationResult& sim);

// ---------------------------------------------------------------------------
// Fit report.

struct FitReport {
  // input digest
  std::string input_file;
  std::string file_hash;   // fnv1a64 as hex
  Index n = 0, p = 0, q = 0;
  // config echo
  Criterion criterion = Criterion::ML;
  int maxit = 0;
  double tol = 0, tau2_init = 0, sigma2_init = 0;
  // estimates
  Vector beta_hat, eta_hat;
  double tau2 = 0, sigma2 = 0;
  double loglik = 0;       // on the scale of `criterion`; never compare across
  int iterations = 0;
  bool converged = false;
  bool boundary_approached = false;

  struct HistoryRow {
    double tau2, sigma2, trace_T_tau, trace_T_sigma, rss, eta_ss;
  };
  std::vector<HistoryRow> history;
  std::vector<double> loglik_trace;  // present with --trace-loglik

  // optional matrix dumps from the final iteration (--inspect)
  bool has_matrices = false;
  Matrix M, C, C_etaeta, M_etaeta_inv;
  double trace_T_tau_ml = 0, trace_T_sigma_ml = 0;
  double trace_T_tau_reml = 0, trace_T_sigma_reml = 0;

  json to_json() const;
  static FitReport from_json(const json& j);
};

/// Assembles a report from a finished fit.
FitReport make_fit_report(const ModelData& model, const EmConfig& config,
                          const FitResult& result, const std::string& input_file,
                          const std::string& file_hash, bool with_matrices);

}  // namespace mixedem

#endif  // MIXEDEM_IO_HPP
