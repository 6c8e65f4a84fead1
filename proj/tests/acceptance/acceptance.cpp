// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 when any fails.
//
//   unalse_acceptance [--only 1,4] [--threads N]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "commands.hpp"
#include "test_support.hpp"
#include "unalse/metrics.hpp"
#include "unalse/parallel.hpp"
#include "unalse/pipeline.hpp"
#include "unalse/simulate.hpp"

namespace {

using namespace unalse;
namespace fs = std::filesystem;

constexpr double kRankFraction = 0.90;
constexpr double kErrRatioMedian = 1.0;
constexpr double kProxDeviation = 1e-6;
constexpr double kPsdSlack = 1e-8;
constexpr double kWhiteNoiseModulus = 0.02;
constexpr double kPdFraction = 0.95;
constexpr double kPredictive = 0.8;
constexpr double kDiagonalGap = 1e-12;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ------------------------------------------------------------ desk study

struct DeskStudy {
  EvaluationReport report;
  std::size_t cells = 0;
  std::size_t S_pd = 0;
  std::size_t sigma_pd = 0;
  double seconds = 0.0;
};

DeskStudy run_desk_study(unsigned threads) {
  const auto start = std::chrono::steady_clock::now();
  const SimulationConfig base = desk_scale_preset();
  constexpr std::size_t kReps = 20;
  PipelineConfig pc;
  pc.grid = base.grid;

  std::vector<std::vector<EstimateCell>> est(kReps);
  std::vector<std::vector<TruthCell>> tru(kReps);
  std::vector<std::size_t> s_pd(kReps, 0), sig_pd(kReps, 0);
  parallel_for(kReps, threads, [&](std::size_t b) {
    SimulationConfig cfg = base;
    cfg.seed = replication_seed(1, b);
    const SimulationTruth truth = simulate(cfg);
    const PipelineResult r = estimate_spectrum(truth.panel, pc);
    for (std::size_t h = 0; h < r.cells.size(); ++h) {
      const FrequencyEstimate& c = r.cells[h];
      est[b].push_back(EstimateCell{c.estimate.L_u, c.estimate.S_u, c.estimate.sigma_u, c.sigma_tilde,
                                    c.estimate.rank});
      tru[b].push_back(TruthCell{truth.L_true[h], truth.S_true[h]});
      s_pd[b] += c.estimate.S_positive_definite;
      sig_pd[b] += c.estimate.sigma_positive_definite;
    }
  });

  DeskStudy study;
  study.report = evaluate(est, tru, base.grid.frequencies, base.r, MetricOptions{});
  study.cells = kReps * base.grid.size();
  for (std::size_t b = 0; b < kReps; ++b) {
    study.S_pd += s_pd[b];
    study.sigma_pd += sig_pd[b];
  }
  study.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return study;
}

Outcome criterion_rank(const DeskStudy& s) {
  const double fraction = s.report.rank_correct / static_cast<double>(s.report.replications);
  return {fraction >= kRankFraction,
          fmt("fraction of cells with rank 2 = %.4f (need >= %.2f; %zu cells, study %.0f s)", fraction,
              kRankFraction, s.cells, s.seconds)};
}

Outcome criterion_err_ratio(const DeskStudy& s) {
  std::vector<double> means;
  std::string per;
  for (const Summary& f : s.report.per_frequency("err_ratio")) {
    if (!f.mean) continue;
    means.push_back(*f.mean);
    per += fmt(" %.3f", *f.mean);
  }
  if (means.empty()) return {false, "err_ratio undefined at every frequency"};
  const double med = median(means);
  return {med <= kErrRatioMedian,
          fmt("median over frequencies of mean err_ratio = %.4f (need <= %.1f; per frequency:", med,
              kErrRatioMedian) + per + ")"};
}

std::optional<double> frequency_average(const EvaluationReport& r, const std::string& metric) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const Summary& f : r.per_frequency(metric)) {
    if (!f.mean) continue;
    sum += *f.mean;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

Outcome criterion_algebraic(const DeskStudy& s) {
  const double cells = static_cast<double>(s.cells);
  const double s_frac = static_cast<double>(s.S_pd) / cells;
  const double sig_frac = static_cast<double>(s.sigma_pd) / cells;
  const auto ppv = frequency_average(s.report, "ppv");
  const auto npv = frequency_average(s.report, "npv");
  const bool pass = s_frac >= kPdFraction && sig_frac >= kPdFraction && ppv && npv && *ppv >= kPredictive &&
                    *npv >= kPredictive;
  return {pass, fmt("S_hat PD in %.3f, Sigma_hat PD in %.3f of cells (need >= %.2f); ppv %.3f, npv %.3f "
                    "(need >= %.1f)",
                    s_frac, sig_frac, kPdFraction, ppv.value_or(std::nan("")), npv.value_or(std::nan("")),
                    kPredictive)};
}

// ------------------------------------------------------------ prox oracles

Outcome criterion_prox() {
  double svt_dev = 0.0;
  double soft_dev = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const HermitianMatrix m = testing::random_hermitian(3, 7000 + seed);
    const double psi = 0.2 + 0.05 * static_cast<double>(seed % 7);
    const double rho = 0.1 + 0.05 * static_cast<double>(seed % 5);
    svt_dev = std::max(svt_dev, testing::max_abs_diff(svt(m, psi).matrix(),
                                                      testing::psd_trace_prox_reference(m.matrix(), psi)));
    soft_dev = std::max(soft_dev, testing::max_abs_diff(soft_threshold(m, rho).matrix(),
                                                        testing::l1_prox_reference(m.matrix(), rho)));
  }
  return {svt_dev <= kProxDeviation && soft_dev <= kProxDeviation,
          fmt("max deviation svt %.2e, soft_threshold %.2e over 20 instances (need <= %.0e)", svt_dev, soft_dev,
              kProxDeviation)};
}

// ------------------------------------------------------------ periodogram

RMatrix ar_panel(Index p, Index T, double phi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  RMatrix mix(p, p);
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j) mix(i, j) = z(rng);
  RMatrix x(p, T);
  RVector prev = RVector::Zero(p);
  for (Index t = 0; t < T; ++t) {
    RVector e(p);
    for (Index i = 0; i < p; ++i) e(i) = z(rng);
    prev = phi * prev + mix * e;
    x.col(t) = prev;
  }
  return x;
}

Outcome criterion_periodogram() {
  // (a) Bartlett PSD on 100 random panels.
  double worst = std::numeric_limits<double>::infinity();
  for (std::uint64_t k = 0; k < 100; ++k) {
    const Index p = 2 + static_cast<Index>(k % 6);
    const Index T = 40 + static_cast<Index>((k * 37) % 400);
    const TimeSeriesPanel panel(ar_panel(p, T, 0.3 + 0.006 * static_cast<double>(k), 100 + k));
    const Index m = default_bandwidth(T);
    for (const HermitianMatrix& s : smoothed_periodogram(panel, {}, m, true)) {
      const EigenDecomposition ed = eigh(s);
      const double scale = std::max(std::abs(ed.eigenvalues(0)), std::abs(ed.eigenvalues(p - 1)));
      worst = std::min(worst, ed.eigenvalues(p - 1) / scale);
    }
  }
  const bool a = worst >= -kPsdSlack;

  // (b) Riemann-sum recovery of Gamma_hat(0) at M_T = 16 and 64.
  const TimeSeriesPanel panel(ar_panel(3, 800, 0.5, 99));
  const RMatrix g0 = sample_autocov(panel, 0, true);
  auto recovery_error = [&](Index m) {
    const auto s = smoothed_periodogram(panel, {}, m, true);
    RMatrix sum = s.front().matrix().real() + s.back().matrix().real();
    for (Index h = 1; h < m; ++h) sum += 2.0 * s[static_cast<std::size_t>(h)].matrix().real();
    sum *= std::numbers::pi / static_cast<double>(m);
    return (sum - g0).norm() / g0.norm();
  };
  const double e16 = recovery_error(16);
  const double e64 = recovery_error(64);
  const bool b = e64 <= 0.5 * e16;

  // (c) White noise at p = 2, T = 5000: flat spectrum I / (2 pi).
  constexpr Index kT = 5000;
  const Index m = default_bandwidth(kT);
  double dev = 0.0;
  std::size_t count = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(5000 + seed);
    std::normal_distribution<double> z;
    RMatrix x(2, kT);
    for (Index t = 0; t < kT; ++t) x.col(t) << z(rng), z(rng);
    for (const HermitianMatrix& s : smoothed_periodogram(TimeSeriesPanel(x), {}, m, true)) {
      const CMatrix diff = s.matrix() - CMatrix::Identity(2, 2) / (2.0 * std::numbers::pi);
      dev += diff.cwiseAbs().sum();
      count += 4;
    }
  }
  dev /= static_cast<double>(count);
  const bool c = dev <= kWhiteNoiseModulus;

  return {a && b && c,
          fmt("(a) %s worst min-eig/||S||_2 = %.2e over 100 panels; (b) %s relative error %.2e at M=16, %.2e at "
              "M=64 (need halving); (c) %s mean entry deviation %.4f (need <= %.2f)",
              a ? "ok" : "FAIL", worst, b ? "ok" : "FAIL", e16, e64, c ? "ok" : "FAIL", dev,
              kWhiteNoiseModulus)};
}

// ------------------------------------------------------------ consistency trend

Outcome criterion_consistency(unsigned threads) {
  constexpr std::size_t kSeeds = 20;
  const std::vector<Index> sizes{200, 800, 3200};
  std::vector<double> means;
  for (Index T : sizes) {
    SimulationConfig base = desk_scale_preset();
    base.T = T;
    PipelineConfig pc;
    pc.grid = base.grid;
    std::vector<double> worst(kSeeds, 0.0);
    parallel_for(kSeeds, threads, [&](std::size_t b) {
      SimulationConfig cfg = base;
      cfg.seed = replication_seed(500, b);
      const SimulationTruth truth = simulate(cfg);
      const PipelineResult r = estimate_spectrum(truth.panel, pc);
      for (std::size_t h = 0; h < r.cells.size(); ++h) {
        const HermitianMatrix err = r.cells[h].estimate.sigma_u - (truth.L_true[h] + truth.S_true[h]);
        worst[b] = std::max(worst[b], matrix_norm(err, NormKind::spectral) / static_cast<double>(cfg.p));
      }
    });
    double sum = 0.0;
    for (double w : worst) sum += w;
    means.push_back(sum / static_cast<double>(kSeeds));
  }
  const bool pass = means[1] < means[0] && means[2] < means[1];
  return {pass, fmt("mean max-frequency ||Sigma_hat - Sigma||_2 / p: T=200 %.5f, T=800 %.5f, T=3200 %.5f "
                    "(need strictly decreasing)",
                    means[0], means[1], means[2])};
}

// ------------------------------------------------------------ unshrink contracts

Outcome criterion_unshrink() {
  std::size_t rank_bad = 0, pattern_bad = 0, diag_bad = 0;
  double worst_gap = 0.0;
  for (std::uint64_t k = 0; k < 100; ++k) {
    SimulationConfig cfg = desk_scale_preset();
    cfg.p = 6 + static_cast<Index>(k % 10);
    cfg.T = 150 + static_cast<Index>((k * 53) % 300);
    cfg.r = 1 + static_cast<Index>(k % 2);
    cfg.c = cfg.r == 1 ? 1.0 : 2.0;
    cfg.seed = 9000 + k;
    const SimulationTruth truth = simulate(cfg);
    const auto st = smoothed_periodogram(truth.panel, {}, default_bandwidth(cfg.T), cfg.grid);
    const std::size_t h = k % st.size();
    PipelineConfig pc;
    pc.selection = k % 3 == 0 ? SelectionMode::manual : SelectionMode::grid;
    pc.solver.psi = 0.05 + 0.01 * static_cast<double>(k % 5);
    pc.solver.rho = 0.01 + 0.005 * static_cast<double>(k % 4);
    pc.thresholds.n_thr = 4;
    pc.diagonal_rule = DiagonalRule::preserve_total;
    const FrequencyEstimate fe = estimate_frequency(st[h], cfg.grid.frequencies[h], cfg.T, pc);

    const AlseSolution& sol = fe.solution;
    const UnalseEstimate& u = fe.estimate;
    const double tol = 1e-9 * std::max(1.0, matrix_norm(u.L_u, NormKind::spectral));
    if (u.rank != sol.rank || numerical_rank(u.L_u, tol) != sol.rank) ++rank_bad;
    for (Index i = 0; i < cfg.p; ++i) {
      for (Index j = 0; j < cfg.p; ++j) {
        if (i != j && u.S_u(i, j) != sol.S_hat(i, j)) {
          ++pattern_bad;
          i = cfg.p;
          break;
        }
      }
    }
    const double gap = (u.sigma_u.diag() - sol.sigma_hat.diag()).cwiseAbs().maxCoeff();
    worst_gap = std::max(worst_gap, gap);
    if (gap > kDiagonalGap) ++diag_bad;
  }
  return {rank_bad == 0 && pattern_bad == 0 && diag_bad == 0,
          fmt("100 outputs: rank changed %zu, off-diagonal pattern changed %zu, diagonal gap > %.0e in %zu "
              "(worst %.2e)",
              rank_bad, pattern_bad, kDiagonalGap, diag_bad, worst_gap)};
}

// ------------------------------------------------------------ CLI determinism

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "unalse");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    files[fs::relative(e.path(), root).string()] = {std::istreambuf_iterator<char>(in),
                                                    std::istreambuf_iterator<char>()};
  }
  return files;
}

Outcome criterion_determinism() {
  const fs::path root = fs::temp_directory_path() / "unalse_acceptance_determinism";
  fs::remove_all(root);
  auto dir = [&](const char* name) { return (root / name).string(); };
  const std::vector<std::string> sim{"simulate", "--scenario", "desk", "--p",      "20",   "--reps",
                                     "2",        "--seed",     "77",   "--grid",   "12",   "--grid-max",
                                     "5"};
  auto with = [](std::vector<std::string> base, std::initializer_list<std::string> extra) {
    base.insert(base.end(), extra);
    return base;
  };
  int codes = 0;
  codes |= cli(with(sim, {"--threads", "1", "--out", dir("truth1")}));
  codes |= cli(with(sim, {"--threads", "4", "--out", dir("truth4")}));
  const std::vector<std::string> est{"estimate", "--truth", dir("truth1"), "--auto-select", "--seed", "77"};
  codes |= cli(with(est, {"--threads", "1", "--out", dir("est1a")}));
  codes |= cli(with(est, {"--threads", "1", "--out", dir("est1b")}));
  codes |= cli(with(est, {"--threads", "4", "--out", dir("est4")}));

  bool pass = codes == 0;
  std::size_t files = 0;
  if (pass) {
    const auto t1 = tree(root / "truth1");
    const auto e1 = tree(root / "est1a");
    files = t1.size() + e1.size();
    pass = !t1.empty() && !e1.empty() && t1 == tree(root / "truth4") && e1 == tree(root / "est1b") &&
           e1 == tree(root / "est4");
  }
  fs::remove_all(root);
  return {pass, fmt("simulate and estimate outputs %s across repeated runs and --threads 1/4 (%zu files, exit "
                    "codes %s)",
                    pass ? "byte-identical" : "differ", files, codes == 0 ? "ok" : "nonzero")};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("UNALSE_THREADS")) threads = std::max(1, std::atoi(env));
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      std::stringstream list(argv[++i]);
      for (std::string item; std::getline(list, item, ',');) only.insert(std::stoi(item));
    } else if (arg == "--threads" && i + 1 < argc) {
      threads = static_cast<unsigned>(std::max(1, std::atoi(argv[++i])));
    } else {
      std::fprintf(stderr, "usage: %s [--only 1,2,...] [--threads N]\n", argv[0]);
      return 2;
    }
  }
  auto wanted = [&](int c) { return only.empty() || only.count(c) > 0; };

  std::optional<DeskStudy> desk;
  auto study = [&]() -> const DeskStudy& {
    if (!desk) desk = run_desk_study(threads);
    return *desk;
  };

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"rank recovery at desk scale", [&] { return criterion_rank(study()); }},
      {"estimation improvement over the smoothed periodogram", [&] { return criterion_err_ratio(study()); }},
      {"prox operators match numerical minimizers", [] { return criterion_prox(); }},
      {"smoothed periodogram correctness", [] { return criterion_periodogram(); }},
      {"error decreases with sample size", [&] { return criterion_consistency(threads); }},
      {"positive definiteness and sign recovery", [&] { return criterion_algebraic(study()); }},
      {"unshrinkage contracts", [] { return criterion_unshrink(); }},
      {"CLI determinism", [] { return criterion_determinism(); }},
  };

  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!wanted(id)) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
