// Command-line surface: simulate / fit / validate / inspect.
//
// Exit codes: 0 success (or validation PASS), 2 input error,
// 3 non-convergence, 4 validation FAIL.

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mixedem/em.hpp"
#include "mixedem/henderson.hpp"
#include "mixedem/io.hpp"
#include "mixedem/likelihood.hpp"
#include "mixedem/model.hpp"
#include "mixedem/oracle.hpp"
#include "mixedem/simulate.hpp"
#include "mixedem/validate.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNonConvergence = 3;
constexpr int kExitValidationFail = 4;

struct FitFlags {
  std::string data_path;
  std::string criterion = "ml";
  double tol = 1e-7;
  int maxit = 100;
  double tau2_init = 1.0;
  double sigma2_init = 1.0;
  bool no_intercept = false;
  std::vector<std::string> design_cols;
  std::vector<std::string> z_cols;
};

void add_fit_flags(CLI::App* cmd, FitFlags* flags) {
  cmd->add_option("data", flags->data_path, "input CSV (columns y,x1..,grp)")
      ->required();
  cmd->add_option("--criterion", flags->criterion, "ml or reml");
  cmd->add_option("--tol", flags->tol, "relative-change tolerance");
  cmd->add_option("--maxit", flags->maxit, "maximum EM iterations");
  cmd->add_option("--tau2-init", flags->tau2_init, "initial tau^2");
  cmd->add_option("--sigma2-init", flags->sigma2_init, "initial sigma^2");
  cmd->add_flag("--no-intercept", flags->no_intercept,
                "do not prepend an intercept column to X");
  cmd->add_option("--design-cols", flags->design_cols,
                  "explicit fixed-effect columns (instead of x1..xk)")
      ->delimiter(',');
  cmd->add_option("--z-cols", flags->z_cols,
                  "explicit random-effect columns (instead of the grp indicator)")
      ->delimiter(',');
}

mixedem::Dataset load_dataset(const FitFlags& flags) {
  mixedem::DesignOptions opts;
  opts.intercept = !flags.no_intercept;
  opts.design_cols = flags.design_cols;
  opts.z_cols = flags.z_cols;
  return mixedem::dataset_from_csv(mixedem::read_csv(flags.data_path), opts);
}

mixedem::EmConfig make_config(const FitFlags& flags, bool trace_loglik) {
  mixedem::EmConfig config;
  config.criterion = mixedem::criterion_from_string(flags.criterion);
  config.tol = flags.tol;
  config.maxit = flags.maxit;
  config.tau2_init = flags.tau2_init;
  config.sigma2_init = flags.sigma2_init;
  config.trace_loglik = trace_loglik;
  return config;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw mixedem::Error("cannot write '" + path + "'");
  out << text;
}

std::string hash_hex(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const std::string& spec_path, const std::string& out_path,
                 std::optional<std::uint64_t> seed_flag,
                 const std::string& truth_path) {
  std::ifstream in(spec_path);
  if (!in) throw mixedem::Error("cannot open '" + spec_path + "'");
  mixedem::json spec_json;
  try {
    in >> spec_json;
  } catch (const mixedem::json::exception& e) {
    throw mixedem::Error(std::string("spec JSON: ") + e.what());
  }
  mixedem::SimulationSpec spec = mixedem::spec_from_json(spec_json);

  // Seed precedence: flag > MIXED_EM_SEED > spec file.
  if (const char* env = std::getenv("MIXED_EM_SEED"); env && !seed_flag) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') {
      throw mixedem::Error("MIXED_EM_SEED is not an unsigned integer");
    }
    spec.seed = v;
  }
  if (seed_flag) spec.seed = *seed_flag;

  const mixedem::SimulationResult sim = mixedem::simulate(spec);
  write_text(out_path, mixedem::simulation_to_csv(sim));
  const std::string truth =
      truth_path.empty() ? out_path + ".truth.json" : truth_path;
  write_text(truth, mixedem::truth_to_json(spec, sim).dump(2) + "\n");
  std::cerr << "wrote " << sim.data.n() << " rows (" << sim.data.q()
            << " groups) to " << out_path << ", truth to " << truth << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_fit(const FitFlags& flags, bool inspect, bool trace_loglik,
            const std::string& out_path, const std::string& dump_design) {
  const mixedem::Dataset dataset = load_dataset(flags);
  if (!dump_design.empty()) {
    write_text(dump_design, mixedem::design_to_json(dataset.data).dump(2) + "\n");
  }
  const mixedem::EmConfig config = make_config(flags, trace_loglik);
  const mixedem::FitResult result = mixedem::fit(dataset.data, config);

  const mixedem::FitReport report = mixedem::make_fit_report(
      dataset.data, config, result, flags.data_path,
      hash_hex(mixedem::fnv1a64_file(flags.data_path)), inspect);
  const std::string text = report.to_json().dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_text(out_path, text);
  }

  std::cerr << mixedem::to_string(config.criterion) << " fit: "
            << (result.converged ? "converged" : "did NOT converge") << " after "
            << result.iterations << " iteration(s); tau2 = "
            << mixedem::format_double(result.vc.tau2()) << ", sigma2 = "
            << mixedem::format_double(result.vc.sigma2()) << ", loglik = "
            << mixedem::format_double(result.loglik) << "\n";
  if (result.boundary_approached) {
    std::cerr << "warning: a variance iterate approached the zero boundary; "
                 "estimates are at the last interior iterate\n";
  }
  return result.converged ? kExitOk : kExitNonConvergence;
}

// ---------------------------------------------------------------------------

void print_validation_table(const mixedem::ValidationReport& rep) {
  const auto row = [](const char* method, const char* lik,
                      const mixedem::Vector& beta, double tau2, double sigma2,
                      double loglik) {
    std::printf("%-8s %-10s", method, lik);
    for (Eigen::Index i = 0; i < beta.size(); ++i) std::printf(" %12.5f", beta[i]);
    std::printf(" %12.5f %12.5f %14.5f\n", tau2, sigma2, loglik);
  };
  std::printf("%-8s %-10s", "method", "likelihood");
  for (Eigen::Index i = 0; i < rep.beta_fit.size(); ++i) {
    std::printf("        beta%lld", static_cast<long long>(i));
  }
  std::printf(" %12s %12s %14s\n", "tau2", "sigma2", "logLik");
  row("em", mixedem::to_string(rep.criterion), rep.beta_fit, rep.tau2_fit,
      rep.sigma2_fit, rep.loglik_fit);
  row("oracle", mixedem::to_string(rep.criterion), rep.beta_oracle,
      rep.tau2_oracle, rep.sigma2_oracle, rep.loglik_oracle);
  std::printf(
      "%s relative discrepancies: tau2 %.3g, sigma2 %.3g, beta %.3g, "
      "loglik %.3g; loglik deficit %.3g%s\n",
      rep.pass ? "PASS" : "FAIL", rep.rel_tau2, rep.rel_sigma2,
      rep.rel_beta_max, rep.rel_loglik, rep.loglik_deficit,
      rep.oracle_boundary_hit ? " (oracle hit a search boundary)" : "");
}

int cmd_validate(const FitFlags& flags, const std::string& criterion_arg,
                 const std::string& oracle_criterion_arg, int oracle_levels,
                 const mixedem::SearchBounds& bounds) {
  const mixedem::Dataset dataset = load_dataset(flags);

  std::string wanted = criterion_arg;
  for (auto& c : wanted) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  std::vector<mixedem::Criterion> criteria;
  if (wanted == "both") {
    criteria = {mixedem::Criterion::ML, mixedem::Criterion::REML};
  } else {
    criteria = {mixedem::criterion_from_string(wanted)};
  }

  bool all_pass = true;
  for (const auto criterion : criteria) {
    FitFlags one = flags;
    one.criterion = mixedem::to_string(criterion);
    const mixedem::EmConfig config = make_config(one, false);
    const mixedem::FitResult result = mixedem::fit(dataset.data, config);
    const mixedem::Criterion oracle_criterion =
        oracle_criterion_arg.empty()
            ? criterion
            : mixedem::criterion_from_string(oracle_criterion_arg);
    const mixedem::OracleResult oracle =
        mixedem::maximize(dataset.data, oracle_criterion, bounds, oracle_levels);
    const mixedem::ValidationReport rep = mixedem::compare(result, oracle);
    std::printf("criterion: %s  (oracle evaluations: %ld)\n",
                mixedem::to_string(criterion), oracle.evaluations);
    print_validation_table(rep);
    std::printf("\n");
    all_pass = all_pass && rep.pass;
  }
  return all_pass ? kExitOk : kExitValidationFail;
}

// ---------------------------------------------------------------------------

int cmd_inspect(const FitFlags& flags, int iteration) {
  const mixedem::Dataset dataset = load_dataset(flags);
  const mixedem::EmConfig config = make_config(flags, false);
  const mixedem::FitResult result = mixedem::fit(dataset.data, config);

  if (iteration < -1 || iteration > result.iterations) {
    std::cerr << "iteration " << iteration << " out of range [0, "
              << result.iterations << "]\n";
    return kExitInput;
  }
  const int k = iteration < 0 ? result.iterations : iteration;
  const mixedem::VarianceComponents vc =
      k == 0 ? mixedem::VarianceComponents(config.tau2_init, config.sigma2_init)
             : result.history[static_cast<std::size_t>(k - 1)].vc;

  const mixedem::HendersonSystem sys = mixedem::assemble(dataset.data, vc);
  const mixedem::HendersonSolution sol = mixedem::solve(sys, dataset.data);
  const mixedem::Matrix schur = mixedem::schur_c_etaeta(sys);
  const auto ml = mixedem::trace_adjustments(mixedem::Criterion::ML, sol, dataset.data);
  const auto reml =
      mixedem::trace_adjustments(mixedem::Criterion::REML, sol, dataset.data);
  const double schur_resid =
      (schur - sol.c_etaeta()).cwiseAbs().maxCoeff();

  const Eigen::IOFormat fmt(10, 0, "  ", "\n", "  [", "]");
  std::cout << "iteration " << k << " of " << result.iterations << " ("
            << mixedem::to_string(config.criterion) << " path"
            << (result.converged ? ", converged" : "") << ")\n";
  std::cout << "tau2 = " << mixedem::format_double(vc.tau2())
            << "  sigma2 = " << mixedem::format_double(vc.sigma2()) << "\n\n";
  std::cout << "M =\n" << sys.M.format(fmt) << "\n\n";
  std::cout << "C = M^{-1} =\n" << sol.C.format(fmt) << "\n\n";
  std::cout << "C_etaeta (prediction-error covariance of eta_hat) =\n"
            << mixedem::Matrix(sol.c_etaeta()).format(fmt) << "\n\n";
  std::cout << "M_etaeta_inv (conditional covariance of eta given y) =\n"
            << sol.M_etaeta_inv.format(fmt) << "\n\n";
  std::printf("trace adjustments          %14s %14s\n", "ML", "REML");
  std::printf("  tau2   (tr T_tau)        %14.10g %14.10g\n", ml.first, reml.first);
  std::printf("  sigma2 (tr T_sigma)      %14.10g %14.10g\n", ml.second, reml.second);
  std::printf("\nschur identity residual |schur - C_etaeta|_max = %.6g\n",
              schur_resid);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"linear mixed-model estimation by EM (ML/REML via trace adjustments)"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate",
                                 "draw a one-way random-effects data set");
  std::string spec_path, sim_out, truth_path;
  std::optional<std::uint64_t> seed_flag;
  sim->add_option("--spec", spec_path, "simulation spec JSON")->required();
  sim->add_option("--out", sim_out, "output CSV path")->required();
  sim->add_option("--seed", seed_flag,
                  "override the spec seed (flag > MIXED_EM_SEED > file)");
  sim->add_option("--truth", truth_path,
                  "truth sidecar path (default: <out>.truth.json)");

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "fit the model by EM");
  FitFlags fit_flags;
  add_fit_flags(fit_cmd, &fit_flags);
  bool inspect_dump = false, trace_loglik = false;
  std::string fit_out, dump_design;
  fit_cmd->add_flag("--inspect", inspect_dump,
                    "include final-iteration matrices in the report");
  fit_cmd->add_flag("--trace-loglik", trace_loglik,
                    "record the objective at every iterate");
  fit_cmd->add_option("--out", fit_out, "report JSON path (default: stdout)");
  fit_cmd->add_option("--dump-design", dump_design,
                      "write the ingested y, X, Z to a JSON file (debug)");

  // validate
  auto* val = app.add_subcommand("validate",
                                 "fit and cross-check against the grid oracle");
  FitFlags val_flags;
  add_fit_flags(val, &val_flags);
  val->get_option("--criterion")->description("ml, reml, or both");
  val_flags.criterion = "both";
  std::string oracle_criterion;
  int oracle_levels = 6;
  mixedem::SearchBounds bounds;
  val->add_option("--oracle-levels", oracle_levels, "grid refinement levels");
  val->add_option("--oracle-tau2-lo", bounds.tau2_lo, "tau2 search lower bound");
  val->add_option("--oracle-tau2-hi", bounds.tau2_hi, "tau2 search upper bound");
  val->add_option("--oracle-sigma2-lo", bounds.sigma2_lo, "sigma2 search lower bound");
  val->add_option("--oracle-sigma2-hi", bounds.sigma2_hi, "sigma2 search upper bound");
  val->add_option("--oracle-criterion", oracle_criterion,
                  "run the oracle under a different criterion (diagnostic; "
                  "the comparison will be refused)");

  // inspect
  auto* ins = app.add_subcommand("inspect",
                                 "print the mixed-model matrices at an iterate");
  FitFlags ins_flags;
  add_fit_flags(ins, &ins_flags);
  int iteration = -1;
  ins->add_option("--iteration", iteration,
                  "iterate to inspect: 0 = initial values, default = final");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Fold CLI11's parse-error codes into the input-error contract;
    // --help and --version still exit 0.
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (sim->parsed()) return cmd_simulate(spec_path, sim_out, seed_flag, truth_path);
    if (fit_cmd->parsed()) {
      return cmd_fit(fit_flags, inspect_dump, trace_loglik, fit_out, dump_design);
    }
    if (val->parsed()) {
      return cmd_validate(val_flags, val_flags.criterion, oracle_criterion,
                          oracle_levels, bounds);
    }
    if (ins->parsed()) return cmd_inspect(ins_flags, iteration);
  } catch (const mixedem::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitOk;
}
