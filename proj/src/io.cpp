#include "mixedem/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

namespace mixedem {

// ---------------------------------------------------------------------------
// Numeric encoding

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

double parse_double(const std::string& s) {
  if (s.empty()) throw Error("empty numeric field");
  char* end = nullptr;
  const double value = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) {
    throw Error("cannot parse '" + s + "' as a number");
  }
  return value;
}

json num_to_json(double x) { return json(format_double(x)); }

double num_from_json(const json& j) {
  if (j.is_string()) return parse_double(j.get<std::string>());
  if (j.is_number()) return j.get<double>();
  throw Error("expected a numeric field");
}

json vec_to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(num_to_json(v[i]));
  return out;
}

Vector vec_from_json(const json& j) {
  if (!j.is_array()) throw Error("expected an array of numbers");
  Vector v(static_cast<Index>(j.size()));
  Index i = 0;
  for (const auto& item : j) v[i++] = num_from_json(item);
  return v;
}

json mat_to_json(const Matrix& m) {
  json out = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(num_to_json(m(i, j)));
    out.push_back(std::move(row));
  }
  return out;
}

std::uint64_t fnv1a64(const void* data, std::size_t len) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < len; ++i) {
    hash ^= bytes[i];
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string content = ss.str();
  return fnv1a64(content.data(), content.size());
}

// ---------------------------------------------------------------------------
// CSV

std::optional<std::size_t> CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

CsvTable parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool any_field = false;

  const auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    any_field = false;
  };
  const auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
  };

  std::size_t i = 0;
  // Skip a UTF-8 BOM if present.
  if (text.size() >= 3 && text.compare(0, 3, "\xef\xbb\xbf") == 0) i = 3;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        any_field = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        end_record();
        break;
      case '\n':
        end_record();
        break;
      default:
        field += c;
        any_field = true;
        break;
    }
  }
  if (!field.empty() || !record.empty() || any_field) end_record();

  if (records.empty()) throw Error("CSV has no header row");
  if (in_quotes) throw Error("CSV ends inside a quoted field");

  CsvTable table;
  table.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    // Tolerate stray blank lines.
    if (records[r].size() == 1 && records[r][0].empty()) continue;
    if (records[r].size() != table.header.size()) {
      throw Error("CSV row " + std::to_string(r) + " has " +
                  std::to_string(records[r].size()) + " fields, header has " +
                  std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

namespace {

Vector numeric_column(const CsvTable& csv, std::size_t col) {
  Vector v(static_cast<Index>(csv.rows.size()));
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    v[static_cast<Index>(r)] = parse_double(csv.rows[r][col]);
  }
  return v;
}

std::size_t required_column(const CsvTable& csv, const std::string& name) {
  const auto col = csv.column(name);
  if (!col) throw Error("CSV is missing required column '" + name + "'");
  return *col;
}

}  // namespace

Dataset dataset_from_csv(const CsvTable& csv, const DesignOptions& opts) {
  if (csv.rows.empty()) throw Error("CSV has no data rows");
  for (std::size_t i = 0; i < csv.header.size(); ++i) {
    for (std::size_t j = i + 1; j < csv.header.size(); ++j) {
      if (csv.header[i] == csv.header[j]) {
        throw Error("duplicate CSV column '" + csv.header[i] + "'");
      }
    }
  }
  const Index n = static_cast<Index>(csv.rows.size());
  const Vector y = numeric_column(csv, required_column(csv, "y"));

  // Covariate columns: explicit names, or x1..xk detected from the header.
  std::vector<std::size_t> covariate_cols;
  if (!opts.design_cols.empty()) {
    for (const auto& name : opts.design_cols) {
      covariate_cols.push_back(required_column(csv, name));
    }
  } else {
    int detected = 0;
    for (int k = 1;; ++k) {
      const auto col = csv.column("x" + std::to_string(k));
      if (!col) break;
      covariate_cols.push_back(*col);
      detected = k;
    }
    // A stray x7 next to x1..x3 is almost surely a mistake; refuse to drop
    // it silently.
    for (const auto& name : csv.header) {
      if (name.size() > 1 && name[0] == 'x' &&
          name.find_first_not_of("0123456789", 1) == std::string::npos) {
        const int k = std::atoi(name.c_str() + 1);
        if (k > detected) {
          throw Error("covariate column '" + name +
                      "' does not follow consecutively from x1; use "
                      "--design-cols to select columns explicitly");
        }
      }
    }
  }

  const Index p_cov = static_cast<Index>(covariate_cols.size());
  const Index p = p_cov + (opts.intercept ? 1 : 0);
  if (p == 0) {
    throw Error("no fixed-effect columns: supply x1.. columns, --design-cols, "
                "or keep the intercept");
  }
  Matrix X(n, p);
  Index offset = 0;
  if (opts.intercept) {
    X.col(0).setOnes();
    offset = 1;
  }
  for (Index j = 0; j < p_cov; ++j) {
    X.col(offset + j) = numeric_column(csv, covariate_cols[static_cast<std::size_t>(j)]);
  }

  Matrix Z;
  std::vector<std::string> labels;
  if (!opts.z_cols.empty()) {
    Z.resize(n, static_cast<Index>(opts.z_cols.size()));
    for (std::size_t j = 0; j < opts.z_cols.size(); ++j) {
      Z.col(static_cast<Index>(j)) =
          numeric_column(csv, required_column(csv, opts.z_cols[j]));
    }
  } else {
    const auto grp = csv.column("grp");
    if (!grp) {
      throw Error("CSV has no 'grp' column and no --z-cols were given");
    }
    labels.reserve(csv.rows.size());
    for (const auto& row : csv.rows) labels.push_back(row[*grp]);
    Z = z_from_groups(labels);
  }
  return Dataset{ModelData(y, X, std::move(Z)), std::move(labels)};
}

json design_to_json(const ModelData& data) {
  json j;
  j["y"] = vec_to_json(data.y());
  j["X"] = mat_to_json(data.X());
  j["Z"] = mat_to_json(data.Z());
  return j;
}

// ---------------------------------------------------------------------------
// Simulation spec

SimulationSpec spec_from_json(const json& j) {
  SimulationSpec spec;
  try {
    if (!j.contains("n_groups") || !j.contains("group_sizes") ||
        !j.contains("beta_true") || !j.contains("tau2_true") ||
        !j.contains("sigma2_true") || !j.contains("seed")) {
      throw Error(
          "spec needs n_groups, group_sizes, beta_true, tau2_true, "
          "sigma2_true, seed");
    }
    const auto n_groups = j.at("n_groups").get<int>();
    for (const auto& size : j.at("group_sizes")) {
      spec.group_sizes.push_back(size.get<int>());
    }
    if (static_cast<int>(spec.group_sizes.size()) != n_groups) {
      throw Error("group_sizes has " + std::to_string(spec.group_sizes.size()) +
                  " entries but n_groups = " + std::to_string(n_groups));
    }
    if (j.contains("n")) {
      const long declared = j.at("n").get<long>();
      const long actual = std::accumulate(spec.group_sizes.begin(),
                                          spec.group_sizes.end(), 0L);
      if (declared != actual) {
        throw Error("n = " + std::to_string(declared) +
                    " but group_sizes sum to " + std::to_string(actual));
      }
    }
    spec.beta_true = vec_from_json(j.at("beta_true"));
    spec.tau2_true = num_from_json(j.at("tau2_true"));
    spec.sigma2_true = num_from_json(j.at("sigma2_true"));
    spec.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("covariate_spec")) {
      const auto& cov = j.at("covariate_spec");
      if (cov.contains("intercept") && !cov.at("intercept").get<bool>()) {
        throw Error("covariate_spec.intercept must be true; the simulator "
                    "always places the intercept in column 1");
      }
      spec.std_normal_covariates = cov.at("standard_normal").get<int>();
    } else {
      spec.std_normal_covariates = static_cast<int>(spec.beta_true.size()) - 1;
    }
  } catch (const json::exception& e) {
    throw Error(std::string("malformed simulation spec: ") + e.what());
  }
  validate_spec(spec);
  return spec;
}

json spec_to_json(const SimulationSpec& spec) {
  json j;
  j["n_groups"] = spec.group_sizes.size();
  j["group_sizes"] = spec.group_sizes;
  json beta = json::array();
  for (Index i = 0; i < spec.beta_true.size(); ++i) {
    beta.push_back(num_to_json(spec.beta_true[i]));
  }
  j["beta_true"] = std::move(beta);
  j["tau2_true"] = num_to_json(spec.tau2_true);
  j["sigma2_true"] = num_to_json(spec.sigma2_true);
  j["seed"] = spec.seed;
  j["covariate_spec"] = {{"intercept", true},
                         {"standard_normal", spec.std_normal_covariates}};
  return j;
}

std::string simulation_to_csv(const SimulationResult& sim) {
  const ModelData& data = sim.data;
  std::ostringstream out;
  out << "y";
  for (Index j = 1; j < data.p(); ++j) out << ",x" << j;
  out << ",grp\n";
  for (Index i = 0; i < data.n(); ++i) {
    out << format_double(data.y()[i]);
    for (Index j = 1; j < data.p(); ++j) {
      out << ',' << format_double(data.X()(i, j));
    }
    out << ',' << sim.labels[static_cast<std::size_t>(i)] << '\n';
  }
  return out.str();
}

json truth_to_json(const SimulationSpec& spec, const SimulationResult& sim) {
  json j;
  j["spec"] = spec_to_json(spec);
  j["n"] = sim.data.n();
  j["p"] = sim.data.p();
  j["q"] = sim.data.q();
  j["eta"] = vec_to_json(sim.eta);
  j["eps"] = vec_to_json(sim.eps);
  return j;
}

// ---------------------------------------------------------------------------
// Fit report

json FitReport::to_json() const {
  json j;
  j["input"] = {{"file", input_file}, {"fnv1a64", file_hash},
                {"n", n}, {"p", p}, {"q", q}};
  j["config"] = {{"criterion", to_string(criterion)},
                 {"maxit", maxit},
                 {"tol", num_to_json(tol)},
                 {"tau2_init", num_to_json(tau2_init)},
                 {"sigma2_init", num_to_json(sigma2_init)}};
  j["estimates"] = {{"beta_hat", vec_to_json(beta_hat)},
                    {"eta_hat", vec_to_json(eta_hat)},
                    {"tau2", num_to_json(tau2)},
                    {"sigma2", num_to_json(sigma2)}};
  j["loglik"] = {{"criterion", to_string(criterion)}, {"value", num_to_json(loglik)}};
  j["iterations"] = iterations;
  j["converged"] = converged;
  j["boundary_approached"] = boundary_approached;
  json hist = json::array();
  for (const auto& row : history) {
    hist.push_back({{"tau2", num_to_json(row.tau2)},
                    {"sigma2", num_to_json(row.sigma2)},
                    {"trace_T_tau", num_to_json(row.trace_T_tau)},
                    {"trace_T_sigma", num_to_json(row.trace_T_sigma)},
                    {"rss", num_to_json(row.rss)},
                    {"eta_ss", num_to_json(row.eta_ss)}});
  }
  j["history"] = std::move(hist);
  if (!loglik_trace.empty()) {
    json tr = json::array();
    for (double v : loglik_trace) tr.push_back(num_to_json(v));
    j["loglik_trace"] = std::move(tr);
  }
  if (has_matrices) {
    j["matrices"] = {
        {"M", mat_to_json(M)},
        {"C", mat_to_json(C)},
        {"C_etaeta", mat_to_json(C_etaeta)},
        {"M_etaeta_inv", mat_to_json(M_etaeta_inv)},
        {"trace_adjustments",
         {{"ml", {{"tau", num_to_json(trace_T_tau_ml)},
                  {"sigma", num_to_json(trace_T_sigma_ml)}}},
          {"reml", {{"tau", num_to_json(trace_T_tau_reml)},
                    {"sigma", num_to_json(trace_T_sigma_reml)}}}}}};
  }
  return j;
}

namespace {

Matrix mat_from_json(const json& j) {
  const Index rows = static_cast<Index>(j.size());
  if (rows == 0) return Matrix(0, 0);
  const Index cols = static_cast<Index>(j.at(0).size());
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const auto& row = j.at(static_cast<std::size_t>(i));
    if (static_cast<Index>(row.size()) != cols) throw Error("ragged matrix");
    for (Index k = 0; k < cols; ++k) {
      m(i, k) = num_from_json(row.at(static_cast<std::size_t>(k)));
    }
  }
  return m;
}

}  // namespace

FitReport FitReport::from_json(const json& j) {
  FitReport rep;
  try {
    const auto& input = j.at("input");
    rep.input_file = input.at("file").get<std::string>();
    rep.file_hash = input.at("fnv1a64").get<std::string>();
    rep.n = input.at("n").get<Index>();
    rep.p = input.at("p").get<Index>();
    rep.q = input.at("q").get<Index>();
    const auto& config = j.at("config");
    rep.criterion = criterion_from_string(config.at("criterion").get<std::string>());
    rep.maxit = config.at("maxit").get<int>();
    rep.tol = num_from_json(config.at("tol"));
    rep.tau2_init = num_from_json(config.at("tau2_init"));
    rep.sigma2_init = num_from_json(config.at("sigma2_init"));
    const auto& est = j.at("estimates");
    rep.beta_hat = vec_from_json(est.at("beta_hat"));
    rep.eta_hat = vec_from_json(est.at("eta_hat"));
    rep.tau2 = num_from_json(est.at("tau2"));
    rep.sigma2 = num_from_json(est.at("sigma2"));
    rep.loglik = num_from_json(j.at("loglik").at("value"));
    rep.iterations = j.at("iterations").get<int>();
    rep.converged = j.at("converged").get<bool>();
    rep.boundary_approached = j.at("boundary_approached").get<bool>();
    for (const auto& row : j.at("history")) {
      rep.history.push_back(HistoryRow{num_from_json(row.at("tau2")),
                                       num_from_json(row.at("sigma2")),
                                       num_from_json(row.at("trace_T_tau")),
                                       num_from_json(row.at("trace_T_sigma")),
                                       num_from_json(row.at("rss")),
                                       num_from_json(row.at("eta_ss"))});
    }
    if (j.contains("loglik_trace")) {
      for (const auto& v : j.at("loglik_trace")) {
        rep.loglik_trace.push_back(num_from_json(v));
      }
    }
    if (j.contains("matrices")) {
      const auto& m = j.at("matrices");
      rep.has_matrices = true;
      rep.M = mat_from_json(m.at("M"));
      rep.C = mat_from_json(m.at("C"));
      rep.C_etaeta = mat_from_json(m.at("C_etaeta"));
      rep.M_etaeta_inv = mat_from_json(m.at("M_etaeta_inv"));
      const auto& tr = m.at("trace_adjustments");
      rep.trace_T_tau_ml = num_from_json(tr.at("ml").at("tau"));
      rep.trace_T_sigma_ml = num_from_json(tr.at("ml").at("sigma"));
      rep.trace_T_tau_reml = num_from_json(tr.at("reml").at("tau"));
      rep.trace_T_sigma_reml = num_from_json(tr.at("reml").at("sigma"));
    }
  } catch (const json::exception& e) {
    throw Error(std::string("malformed fit report: ") + e.what());
  }
  return rep;
}

FitReport make_fit_report(const ModelData& model, const EmConfig& config,
                          const FitResult& result, const std::string& input_file,
                          const std::string& file_hash, bool with_matrices) {
  FitReport rep;
  rep.input_file = input_file;
  rep.file_hash = file_hash;
  rep.n = model.n();
  rep.p = model.p();
  rep.q = model.q();
  rep.criterion = config.criterion;
  rep.maxit = config.maxit;
  rep.tol = config.tol;
  rep.tau2_init = config.tau2_init;
  rep.sigma2_init = config.sigma2_init;
  rep.beta_hat = result.beta_hat;
  rep.eta_hat = result.eta_hat;
  rep.tau2 = result.vc.tau2();
  rep.sigma2 = result.vc.sigma2();
  rep.loglik = result.loglik;
  rep.iterations = result.iterations;
  rep.converged = result.converged;
  rep.boundary_approached = result.boundary_approached;
  for (const auto& entry : result.history) {
    rep.history.push_back(FitReport::HistoryRow{
        entry.vc.tau2(), entry.vc.sigma2(), entry.diagnostics.trace_T_tau,
        entry.diagnostics.trace_T_sigma, entry.diagnostics.rss,
        entry.diagnostics.eta_ss});
  }
  rep.loglik_trace = result.loglik_trace;
  if (with_matrices) {
    rep.has_matrices = true;
    // Final-iteration objects: the solve the last update was computed from.
    const HendersonSolution& sol = result.solution;
    HendersonSystem sys = assemble(
        model, result.history.size() > 1
                   ? result.history[result.history.size() - 2].vc
                   : VarianceComponents(config.tau2_init, config.sigma2_init));
    rep.M = sys.M;
    rep.C = sol.C;
    rep.C_etaeta = sol.c_etaeta();
    rep.M_etaeta_inv = sol.M_etaeta_inv;
    const auto ml = trace_adjustments(Criterion::ML, sol, model);
    const auto reml = trace_adjustments(Criterion::REML, sol, model);
    rep.trace_T_tau_ml = ml.first;
    rep.trace_T_sigma_ml = ml.second;
    rep.trace_T_tau_reml = reml.first;
    rep.trace_T_sigma_reml = reml.second;
  }
  return rep;
}

}  // namespace mixedem
