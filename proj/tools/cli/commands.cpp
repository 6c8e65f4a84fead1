#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "unalse/errors.hpp"
#include "unalse/io.hpp"
#include "unalse/metrics.hpp"
#include "unalse/parallel.hpp"
#include "unalse/pipeline.hpp"
#include "unalse/simulate.hpp"

namespace unalse::cli {

namespace fs = std::filesystem;

unsigned default_threads() {
  const char* env = std::getenv("UNALSE_THREADS");
  if (env == nullptr) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 1) return 1;
  return static_cast<unsigned>(v);
}

namespace {

/// Raised for flag combinations CLI11 cannot express.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Replica {
  std::string name;  ///< empty for a single bundle
  fs::path dir;
};

/// A directory holding manifest.json is one bundle; otherwise every
/// subdirectory with a manifest is one, in name order.
std::vector<Replica> list_bundles(const fs::path& root) {
  if (!fs::is_directory(root)) throw BundleError("not a directory: " + root.string());
  if (fs::exists(root / "manifest.json")) return {Replica{"", root}};
  std::vector<Replica> out;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && fs::exists(entry.path() / "manifest.json")) {
      out.push_back(Replica{entry.path().filename().string(), entry.path()});
    }
  }
  std::sort(out.begin(), out.end(), [](const Replica& a, const Replica& b) { return a.name < b.name; });
  if (out.empty()) throw BundleError("no bundles under " + root.string());
  return out;
}

std::string replica_name(std::size_t b, std::size_t total) {
  const std::size_t width = std::max<std::size_t>(3, std::to_string(total).size());
  std::string digits = std::to_string(b + 1);
  return "rep_" + std::string(width - digits.size(), '0') + digits;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string scenario = "desk";
  int setting = 1;
  int reps = 1;
  std::uint64_t seed = 1;
  std::string out;
  std::optional<Index> p, T, r, grid, grid_max;
  std::optional<double> c, beta, tau, delta, delta_bis, kappa_pert;
  std::vector<double> lambda;
  bool normalize_lambda = false;
  bool unsigned_offdiagonals = false;
  unsigned threads = 1;
};

void add_simulate(CLI::App& app, SimulateArgs& a, std::function<int()>& action, std::ostream& out) {
  CLI::App* cmd = app.add_subcommand("simulate", "Generate ground-truth replications");
  cmd->add_option("--scenario", a.scenario, "A, B, C or desk")
      ->check(CLI::IsMember({"A", "B", "C", "a", "b", "c", "desk"}));
  cmd->add_option("--setting", a.setting, "Setting 1-5 for scenarios A-C")->check(CLI::Range(1, 5));
  cmd->add_option("--reps", a.reps, "Number of replications")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", a.seed, "Base seed");
  cmd->add_option("--out", a.out, "Output directory")->required();
  cmd->add_option("--p", a.p, "Override the dimension");
  cmd->add_option("--T", a.T, "Override the sample size");
  cmd->add_option("--r", a.r, "Override the latent rank");
  cmd->add_option("--c", a.c, "Override the latent condition number");
  cmd->add_option("--beta", a.beta, "Override the latent variance share");
  cmd->add_option("--tau", a.tau, "Override the overall scale");
  cmd->add_option("--delta", a.delta, "Override the residual Cauchy-Schwarz fraction");
  cmd->add_option("--delta-bis", a.delta_bis, "Override the residual survival proportion");
  cmd->add_option("--kappa-pert", a.kappa_pert, "Override the filter perturbation");
  cmd->add_option("--lambda", a.lambda, "Lag coefficients lambda_0 .. lambda_nl");
  cmd->add_flag("--normalize-lambda", a.normalize_lambda, "Rescale lambda to unit sum of squares");
  cmd->add_flag("--unsigned-offdiagonals", a.unsigned_offdiagonals,
                "Draw residual off-diagonals without random signs");
  cmd->add_option("--grid", a.grid, "Frequency grid theta_h = pi h / grid")->check(CLI::PositiveNumber);
  cmd->add_option("--grid-max", a.grid_max, "Largest h of the grid (default: grid)");
  cmd->add_option("--threads", a.threads, "Worker threads")->check(CLI::PositiveNumber);

  cmd->callback([&a, &action, &out] {
    action = [&a, &out]() -> int {
      SimulationConfig base = a.scenario == "desk" ? desk_scale_preset()
                                                   : scenario_preset(a.scenario.front(), a.setting);
      if (a.p) base.p = *a.p;
      if (a.T) base.T = *a.T;
      if (a.r) base.r = *a.r;
      if (a.c) base.c = *a.c;
      if (a.beta) base.beta = *a.beta;
      if (a.tau) base.tau = *a.tau;
      if (a.delta) base.delta = *a.delta;
      if (a.delta_bis) base.delta_bis = *a.delta_bis;
      if (a.kappa_pert) base.kappa_pert = *a.kappa_pert;
      if (!a.lambda.empty()) base.lambda_coeffs = a.lambda;
      base.normalize_lambda = a.normalize_lambda;
      if (a.unsigned_offdiagonals) base.signed_offdiagonals = false;
      if (a.grid_max && !a.grid) throw UsageError("--grid-max requires --grid");
      if (a.grid) base.grid = FrequencyGrid::fractions_of_pi(*a.grid, a.grid_max.value_or(*a.grid));
      base.validate();

      const fs::path root(a.out);
      fs::create_directories(root);
      const auto n = static_cast<std::size_t>(a.reps);
      parallel_for(n, a.threads, [&](std::size_t b) {
        SimulationConfig cfg = base;
        cfg.seed = replication_seed(a.seed, b);
        write_truth(simulate(cfg), root / replica_name(b, n));
      });
      out << "wrote " << n << " replication(s) to " << root.string() << '\n';
      return kOk;
    };
  });
}

// ---------------------------------------------------------------- estimate

struct EstimateArgs {
  std::string input;
  std::string truth;
  std::string out;
  std::string delimiter = ",";
  bool header = false;
  bool transpose = false;
  std::string kernel = "bartlett";
  std::string bandwidth = "auto";
  std::optional<Index> grid, grid_max;
  bool demean = true;
  std::optional<double> psi, rho;
  bool auto_select = false;
  int r_thr = 1;
  double s_thr = 1.0;
  int n_thr = 8;
  int max_outer = 10;
  double varsigma = 0.01;
  int max_iterations = 500;
  bool no_gini = false;
  std::string diagonal_rule = "preserve-total";
  unsigned threads = 1;
  std::optional<std::uint64_t> seed;
  bool with_inverse = false;
  bool strict = false;
  bool no_sigma_tilde = false;
};

PipelineConfig pipeline_config(const EstimateArgs& a) {
  PipelineConfig pc;
  pc.kernel.family = parse_kernel(a.kernel);
  if (a.bandwidth != "auto") {
    try {
      std::size_t used = 0;
      const long v = std::stol(a.bandwidth, &used);
      if (used != a.bandwidth.size() || v < 1) throw std::invalid_argument("bandwidth");
      pc.bandwidth = static_cast<Index>(v);
    } catch (const std::logic_error&) {
      throw UsageError("--bandwidth must be 'auto' or a positive integer");
    }
  }
  if (a.grid_max && !a.grid) throw UsageError("--grid-max requires --grid");
  if (a.grid) pc.grid = FrequencyGrid::fractions_of_pi(*a.grid, a.grid_max.value_or(*a.grid));
  pc.demean = a.demean;

  if (a.psi.has_value() != a.rho.has_value()) throw UsageError("--psi and --rho must be given together");
  if (a.psi && a.auto_select) throw UsageError("--psi/--rho cannot be combined with --auto-select");
  pc.selection = a.psi ? SelectionMode::manual : a.auto_select ? SelectionMode::auto_tune : SelectionMode::grid;
  if (a.psi) {
    pc.solver.psi = *a.psi;
    pc.solver.rho = *a.rho;
  }
  pc.solver.varsigma = a.varsigma;
  pc.solver.max_iterations = a.max_iterations;
  pc.solver.gini_adaptation = !a.no_gini;
  pc.thresholds.r_thr = a.r_thr;
  pc.thresholds.s_thr = a.s_thr;
  pc.thresholds.n_thr = a.n_thr;
  pc.thresholds.max_outer = a.max_outer;
  pc.diagonal_rule = parse_diagonal_rule(a.diagonal_rule);
  pc.with_inverse = a.with_inverse;
  pc.keep_sigma_tilde = !a.no_sigma_tilde;
  pc.threads = a.threads;
  return pc;
}

void add_estimate(CLI::App& app, EstimateArgs& a, std::function<int()>& action, std::ostream& out,
                  std::ostream& err) {
  CLI::App* cmd = app.add_subcommand("estimate", "Estimate low-rank plus sparse spectral densities");
  auto* input = cmd->add_option("--input", a.input, "Panel CSV (rows = series unless --transpose)");
  auto* truth = cmd->add_option("--truth", a.truth, "Truth bundle directory, or a directory of them");
  input->excludes(truth);
  cmd->add_option("--out", a.out, "Output directory")->required();
  cmd->add_option("--delimiter", a.delimiter, "Field delimiter of --input");
  cmd->add_flag("--header", a.header, "Skip the first line of --input");
  cmd->add_flag("--transpose", a.transpose, "Rows of --input are time points");
  cmd->add_option("--kernel", a.kernel, "Lag window")->check(CLI::IsMember({"bartlett", "parzen"}));
  cmd->add_option("--bandwidth", a.bandwidth, "auto (floor(sqrt(T))) or an integer");
  cmd->add_option("--grid", a.grid, "Frequency grid theta_h = pi h / grid")->check(CLI::PositiveNumber);
  cmd->add_option("--grid-max", a.grid_max, "Largest h of the grid (default: grid)");
  cmd->add_option("--demean", a.demean, "Remove series means (true/false)");
  cmd->add_option("--psi", a.psi, "Manual eigenvalue threshold")->check(CLI::PositiveNumber);
  cmd->add_option("--rho", a.rho, "Manual sparsity threshold")->check(CLI::PositiveNumber);
  cmd->add_flag("--auto-select", a.auto_select, "Tune r_thr and s_thr around the threshold grid");
  cmd->add_option("--r-thr", a.r_thr, "Initial latent rank magnitude")->check(CLI::PositiveNumber);
  cmd->add_option("--s-thr", a.s_thr, "Initial residual sparsity magnitude")->check(CLI::PositiveNumber);
  cmd->add_option("--n-thr", a.n_thr, "Grid points per threshold")->check(CLI::Range(2, 1000));
  cmd->add_option("--max-outer", a.max_outer, "Tuning rounds")->check(CLI::NonNegativeNumber);
  cmd->add_option("--varsigma", a.varsigma, "Solver stopping level")->check(CLI::PositiveNumber);
  cmd->add_option("--max-iter", a.max_iterations, "Solver iteration cap")->check(CLI::PositiveNumber);
  cmd->add_flag("--no-gini", a.no_gini, "Disable Gini rescaling of the eigenvalue threshold");
  cmd->add_option("--diagonal-rule", a.diagonal_rule, "Residual diagonal repair")
      ->check(CLI::IsMember({"preserve-total", "shrunk-latent"}));
  cmd->add_option("--threads", a.threads, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", a.seed, "Recorded in the manifest");
  cmd->add_flag("--with-inverse", a.with_inverse, "Also write inverses of positive definite S and Sigma");
  cmd->add_flag("--strict", a.strict, "Exit with status 4 when any solver run did not converge");
  cmd->add_flag("--no-sigma-tilde", a.no_sigma_tilde, "Do not store the smoothed periodogram");

  cmd->callback([&a, &action, &out, &err] {
    action = [&a, &out, &err]() -> int {
      if (a.input.empty() && a.truth.empty()) throw UsageError("one of --input or --truth is required");
      if (a.delimiter.size() != 1) throw UsageError("--delimiter must be a single character");
      const PipelineConfig base = pipeline_config(a);

      struct Job {
        std::string name;
        std::string source;
        TimeSeriesPanel panel;
        std::optional<FrequencyGrid> grid;
      };
      std::vector<Job> jobs;
      if (!a.input.empty()) {
        const PanelReadOptions opts{a.delimiter.front(), a.header, a.transpose};
        jobs.push_back(Job{"", a.input, read_panel(a.input, opts), std::nullopt});
      } else {
        for (const Replica& rep : list_bundles(a.truth)) {
          const TruthBundle t = read_truth(rep.dir);
          jobs.push_back(Job{rep.name, rep.dir.string(), read_truth_panel(rep.dir),
                             FrequencyGrid::custom(t.frequencies)});
        }
      }

      bool all_converged = true;
      for (const Job& job : jobs) {
        PipelineConfig pc = base;
        if (!pc.grid && job.grid) pc.grid = job.grid;
        const PipelineResult result = estimate_spectrum(job.panel, pc);
        const fs::path dir = job.name.empty() ? fs::path(a.out) : fs::path(a.out) / job.name;
        write_estimate(to_bundle(result, pc, a.seed, job.source), dir);
        std::vector<Index> ranks;
        for (const FrequencyEstimate& c : result.cells) {
          ranks.push_back(c.estimate.rank);
          all_converged = all_converged && c.solution.converged;
        }
        out << dir.string() << ": p=" << result.p << " T=" << result.T << " M_T=" << result.bandwidth
            << " ranks=";
        for (std::size_t h = 0; h < ranks.size(); ++h) out << (h ? "," : "") << ranks[h];
        out << '\n';
      }
      if (!all_converged) {
        err << "warning: at least one solver run hit the iteration cap\n";
        if (a.strict) return kNumeric;
      }
      return kOk;
    };
  });
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string estimates;
  std::string truth;
  std::string report;
  std::string csv_dir;
  double gamma = 1.0;
  Index dyn_rank = 0;
  double zero_tol = kDefaultZeroTolerance;
};

void add_evaluate(CLI::App& app, EvaluateArgs& a, std::function<int()>& action, std::ostream& out) {
  CLI::App* cmd = app.add_subcommand("evaluate", "Compare estimate bundles with truth bundles");
  cmd->add_option("--estimates", a.estimates, "Estimate bundle or directory of bundles")->required();
  cmd->add_option("--truth", a.truth, "Truth bundle or directory of bundles")->required();
  cmd->add_option("--report", a.report, "JSON report path")->required();
  cmd->add_option("--csv-dir", a.csv_dir, "Also write one per-frequency CSV per metric here");
  cmd->add_option("--gamma", a.gamma, "Weight of the sparse part in the composite loss")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--dyn-rank", a.dyn_rank, "Rank of the dynamic PCA baseline (0 = off)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--zero-tol", a.zero_tol, "Modulus treated as zero")->check(CLI::NonNegativeNumber);

  cmd->callback([&a, &action, &out] {
    action = [&a, &out]() -> int {
      const std::vector<Replica> est = list_bundles(a.estimates);
      const std::vector<Replica> tru = list_bundles(a.truth);
      if (est.size() != tru.size()) {
        throw BundleError("found " + std::to_string(est.size()) + " estimate and " +
                          std::to_string(tru.size()) + " truth bundles");
      }
      std::vector<std::vector<EstimateCell>> est_cells;
      std::vector<std::vector<TruthCell>> tru_cells;
      std::vector<double> freqs;
      Index r_true = 0;
      for (std::size_t b = 0; b < est.size(); ++b) {
        if (est[b].name != tru[b].name) {
          throw BundleError("estimate '" + est[b].name + "' has no matching truth bundle");
        }
        const EstimateBundle e = read_estimate(est[b].dir);
        const TruthBundle t = read_truth(tru[b].dir);
        if (!e.manifest.has_sigma_tilde) {
          throw BundleError(est[b].dir.string() + " was written without the smoothed periodogram");
        }
        const auto& ef = e.manifest.frequencies;
        if (ef.size() != t.frequencies.size()) {
          throw BundleError(est[b].dir.string() + ": frequency grid differs from the truth");
        }
        for (std::size_t h = 0; h < ef.size(); ++h) {
          if (std::abs(ef[h].theta - t.frequencies[h]) > 1e-12) {
            throw BundleError(est[b].dir.string() + ": frequency grid differs from the truth");
          }
        }
        if (b == 0) {
          freqs = t.frequencies;
          r_true = t.r;
        }
        std::vector<EstimateCell> ec;
        std::vector<TruthCell> tc;
        for (std::size_t h = 0; h < ef.size(); ++h) {
          ec.push_back(EstimateCell{e.L[h], e.S[h], e.sigma[h], e.sigma_tilde[h], ef[h].rank});
          tc.push_back(TruthCell{t.L_true[h], t.S_true[h]});
        }
        est_cells.push_back(std::move(ec));
        tru_cells.push_back(std::move(tc));
      }

      MetricOptions opts;
      opts.gamma = a.gamma;
      opts.dyn_rank = a.dyn_rank;
      opts.zero_tol = a.zero_tol;
      const EvaluationReport report = evaluate(est_cells, tru_cells, freqs, r_true, opts);
      {
        const fs::path path(a.report);
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw BundleError("cannot write " + path.string());
        f << report_to_json(report) << '\n';
      }
      if (!a.csv_dir.empty()) {
        fs::create_directories(a.csv_dir);
        for (const std::string& m : EvaluationReport::metric_names()) {
          std::ofstream f(fs::path(a.csv_dir) / (m + ".csv"), std::ios::binary | std::ios::trunc);
          write_metric_csv(f, report, m);
        }
      }
      out << "replications=" << report.replications << " frequencies=" << freqs.size()
          << " rank_correct=" << report.rank_correct << '\n';
      return kOk;
    };
  });
}

// ---------------------------------------------------------------- summary

struct SummaryArgs {
  std::string estimates;
  std::string out;
  int eigs = 4;
};

void write_summary(std::ostream& os, const std::vector<Replica>& bundles, int eigs) {
  os << "bundle,theta,f,rank,beta_hat,zeta_hat,nonzero_fraction";
  for (int j = 1; j <= eigs; ++j) os << ",eig" << j << "_over_p";
  os << '\n';
  for (const Replica& rep : bundles) {
    const EstimateBundle b = read_estimate(rep.dir);
    const Index p = b.manifest.p;
    const double off_cells = static_cast<double>(p * (p - 1) / 2);
    for (std::size_t h = 0; h < b.manifest.frequencies.size(); ++h) {
      const FrequencyRecord& f = b.manifest.frequencies[h];
      os << rep.name << ',' << format_double(f.theta) << ',' << format_double(f.theta / std::numbers::pi)
         << ',' << f.rank << ',' << (f.beta_hat ? format_double(*f.beta_hat) : std::string()) << ','
         << (f.zeta_hat ? format_double(*f.zeta_hat) : std::string()) << ','
         << format_double(off_cells > 0 ? static_cast<double>(f.nonzeros) / off_cells : 0.0);
      const HermitianMatrix& source = b.manifest.has_sigma_tilde ? b.sigma_tilde[h] : b.sigma[h];
      const RVector ev = eigh(source).eigenvalues;
      for (int j = 0; j < eigs; ++j) {
        os << ',';
        if (j < ev.size()) os << format_double(ev(j) / static_cast<double>(p));
      }
      os << '\n';
    }
  }
}

void add_summary(CLI::App& app, SummaryArgs& a, std::function<int()>& action, std::ostream& out) {
  CLI::App* cmd = app.add_subcommand(
      "summary", "Per-frequency latent share, residual share, sparsity and leading eigenvalues");
  cmd->add_option("--estimates", a.estimates, "Estimate bundle or directory of bundles")->required();
  cmd->add_option("--out", a.out, "CSV path (default: standard output)");
  cmd->add_option("--eigs", a.eigs, "Leading eigenvalues of the smoothed periodogram to report")
      ->check(CLI::NonNegativeNumber);

  cmd->callback([&a, &action, &out] {
    action = [&a, &out]() -> int {
      const std::vector<Replica> bundles = list_bundles(a.estimates);
      if (a.out.empty()) {
        write_summary(out, bundles, a.eigs);
      } else {
        std::ofstream f(a.out, std::ios::binary | std::ios::trunc);
        if (!f) throw BundleError("cannot write " + a.out);
        write_summary(f, bundles, a.eigs);
      }
      return kOk;
    };
  });
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Low-rank plus sparse spectral density estimation", "unalse"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::function<int()> action;
  SimulateArgs sim;
  EstimateArgs est;
  EvaluateArgs eval;
  SummaryArgs sum;
  const unsigned threads = default_threads();
  sim.threads = threads;
  est.threads = threads;
  add_simulate(app, sim, action, out);
  add_estimate(app, est, action, out, err);
  add_evaluate(app, eval, action, out);
  add_summary(app, sum, action, out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }
  if (!action) return kOk;

  try {
    return action();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInputParse;
  } catch (const BundleError& e) {
    err << "error: " << e.what() << '\n';
    return kInputParse;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const NoAdmissibleSolution& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace unalse::cli
