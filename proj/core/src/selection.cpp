#include "unalse/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>
#include <string>
#include <utility>

#include "unalse/errors.hpp"
#include "unalse/parallel.hpp"

namespace unalse {

void ThresholdConfig::validate() const {
  if (r_thr < 1) throw ArgumentError("ThresholdConfig: r_thr must be >= 1");
  if (!(s_thr > 0.0)) throw ArgumentError("ThresholdConfig: s_thr must be > 0");
  if (n_thr < 2) throw ArgumentError("ThresholdConfig: n_thr must be >= 2");
  if (max_outer < 0) throw ArgumentError("ThresholdConfig: max_outer must be >= 0");
}

double incoherence_proxy(int r_thr, Index p) {
  if (r_thr < 1 || p < 1 || r_thr > p) {
    throw ArgumentError("incoherence_proxy: need 1 <= r_thr <= p (r_thr = " +
                        std::to_string(r_thr) + ", p = " + std::to_string(p) + ")");
  }
  return std::pow(static_cast<double>(r_thr) / static_cast<double>(p), 0.25);
}

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] =
        i == n - 1 ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return out;
}

double scale(Index p, Index sample_size, int r_thr) {
  if (p < 1 || sample_size < 1) throw ArgumentError("threshold grid: p and T must be >= 1");
  return std::sqrt(static_cast<double>(p) / static_cast<double>(sample_size)) /
         incoherence_proxy(r_thr, p);
}

}  // namespace

std::vector<double> psi_grid(Index p, Index sample_size, int r_thr, int n_thr) {
  if (n_thr < 2) throw ArgumentError("psi_grid: n_thr must be >= 2");
  const double top = scale(p, sample_size, r_thr);
  return linspace(0.5 * top, top, n_thr);
}

std::vector<double> gamma_grid(Index p, double s_thr, int n_thr) {
  if (p < 1) throw ArgumentError("gamma_grid: p must be >= 1");
  if (n_thr < 2) throw ArgumentError("gamma_grid: n_thr must be >= 2");
  const double pd = static_cast<double>(p);
  return linspace(s_thr / std::sqrt(pd), s_thr / std::pow(pd, 0.25), n_thr);
}

std::vector<double> rho_grid(Index p, Index sample_size, int r_thr, double s_thr, int n_thr) {
  std::vector<double> out = gamma_grid(p, s_thr, n_thr);
  const double factor = scale(p, sample_size, r_thr);
  for (double& g : out) g *= factor;
  return out;
}

double mc_criterion(const AlseSolution& solution, double psi, double rho) {
  const double total = solution.sigma_hat.trace();
  if (!(total > 0.0)) return std::numeric_limits<double>::infinity();
  const double beta = solution.L_hat.trace() / total;
  if (!(beta > 0.0 && beta < 1.0)) return std::numeric_limits<double>::infinity();
  const double latent = static_cast<double>(solution.rank) *
                        matrix_norm(solution.L_hat, NormKind::spectral) / beta;
  const double residual = (psi / rho) * matrix_norm(solution.S_hat, NormKind::l1v) / (1.0 - beta);
  return std::max(latent, residual);
}

namespace {

/// Unset solution and infinite mc_value when no cell is admissible.
SelectionResult search_grid(const HermitianMatrix& sigma_tilde, const std::vector<double>& psis,
                            const std::vector<double>& rhos, const SolverConfig& solver_defaults,
                            unsigned threads) {
  if (psis.empty() || rhos.empty()) throw ArgumentError("select_on_grid: empty grid");
  const std::size_t n_rho = rhos.size();
  const std::size_t cells = psis.size() * n_rho;

  std::vector<AlseSolution> solutions(cells);
  std::vector<GridCell> trace(cells);
  parallel_for(cells, threads, [&](std::size_t c) {
    SolverConfig cfg = solver_defaults;
    cfg.psi = psis[c / n_rho];
    cfg.rho = rhos[c % n_rho];
    solutions[c] = alse_solve(sigma_tilde, cfg);
    const AlseSolution& s = solutions[c];
    trace[c] = GridCell{cfg.psi, cfg.rho, mc_criterion(s, s.psi_effective, cfg.rho), s.rank,
                        s.nonzero_count, s.converged};
  });

  std::size_t best = cells;
  for (std::size_t c = 0; c < cells; ++c) {
    if (!std::isfinite(trace[c].mc)) continue;
    if (best == cells) {
      best = c;
      continue;
    }
    const GridCell& a = trace[c];
    const GridCell& b = trace[best];
    if (a.mc < b.mc || (a.mc == b.mc && (a.psi < b.psi || (a.psi == b.psi && a.rho < b.rho)))) {
      best = c;
    }
  }
  SelectionResult out;
  if (best == cells) {
    out.mc_value = std::numeric_limits<double>::infinity();
    out.grid_trace = std::move(trace);
    return out;
  }

  const auto [psi_lo, psi_hi] = std::minmax_element(psis.begin(), psis.end());
  const auto [rho_lo, rho_hi] = std::minmax_element(rhos.begin(), rhos.end());

  out.psi_star = trace[best].psi;
  out.rho_star = trace[best].rho;
  out.mc_value = trace[best].mc;
  out.solution = std::move(solutions[best]);
  out.boundary_flag = out.psi_star == *psi_lo || out.psi_star == *psi_hi ||
                      out.rho_star == *rho_lo || out.rho_star == *rho_hi;
  out.grid_trace = std::move(trace);
  return out;
}

bool admissible(const SelectionResult& res) { return std::isfinite(res.mc_value); }

SelectionResult search_thresholds(const HermitianMatrix& sigma_tilde, Index sample_size,
                                  const ThresholdConfig& config, const SolverConfig& solver_defaults,
                                  unsigned threads) {
  config.validate();
  const Index p = sigma_tilde.dim();
  SelectionResult out =
      search_grid(sigma_tilde, psi_grid(p, sample_size, config.r_thr, config.n_thr),
                     rho_grid(p, sample_size, config.r_thr, config.s_thr, config.n_thr),
                     solver_defaults, threads);
  out.r_thr = config.r_thr;
  out.s_thr = config.s_thr;
  out.rounds = 1;
  return out;
}

}  // namespace

SelectionResult select_on_grid(const HermitianMatrix& sigma_tilde, const std::vector<double>& psis,
                               const std::vector<double>& rhos, const SolverConfig& solver_defaults,
                               unsigned threads) {
  SelectionResult out = search_grid(sigma_tilde, psis, rhos, solver_defaults, threads);
  if (!admissible(out)) throw NoAdmissibleSolution("select_thresholds: no admissible solution on grid");
  return out;
}

SelectionResult select_thresholds(const HermitianMatrix& sigma_tilde, Index sample_size,
                                  const ThresholdConfig& config, const SolverConfig& solver_defaults,
                                  unsigned threads) {
  SelectionResult out = search_thresholds(sigma_tilde, sample_size, config, solver_defaults, threads);
  if (!admissible(out)) throw NoAdmissibleSolution("select_thresholds: no admissible solution on grid");
  return out;
}

namespace {

struct RoundDiagnosis {
  int rank_step = 0;    ///< -1 halve r_thr, +1 double it
  int sparse_step = 0;  ///< -1 halve s_thr, +1 double it
  bool stable = false;
};

/// No admissible cell: with no latent part anywhere psi is too large,
/// otherwise rho removed the whole residual.
RoundDiagnosis diagnose_empty(const SelectionResult& res) {
  RoundDiagnosis d;
  const bool any_rank = std::any_of(res.grid_trace.begin(), res.grid_trace.end(),
                                    [](const GridCell& c) { return c.rank > 0; });
  if (any_rank) {
    d.sparse_step = -1;
  } else {
    d.rank_step = +1;
  }
  return d;
}

RoundDiagnosis diagnose(const SelectionResult& res, Index p) {
  if (!admissible(res)) return diagnose_empty(res);
  const auto& trace = res.grid_trace;
  double psi_lo = trace.front().psi, psi_hi = psi_lo, rho_lo = trace.front().rho, rho_hi = rho_lo;
  for (const GridCell& c : trace) {
    psi_lo = std::min(psi_lo, c.psi);
    psi_hi = std::max(psi_hi, c.psi);
    rho_lo = std::min(rho_lo, c.rho);
    rho_hi = std::max(rho_hi, c.rho);
  }
  Index rank_min = std::numeric_limits<Index>::max(), rank_max = 0;
  for (const GridCell& c : trace) {
    if (c.rho != res.rho_star) continue;
    rank_min = std::min(rank_min, c.rank);
    rank_max = std::max(rank_max, c.rank);
  }

  const Index rank = res.solution.rank;
  const Index nonzeros = res.solution.nonzero_count;
  const Index off_cells = p * (p - 1) / 2;
  const bool rank_unstable = rank_max - rank_min > 2;
  const bool diagonal_only = nonzeros == 0 && off_cells > 0;
  const bool too_dense = 2 * nonzeros > off_cells;

  RoundDiagnosis d;
  if (res.psi_star == psi_lo || rank == 0) {
    d.rank_step = +1;
  } else if (res.psi_star == psi_hi || rank_unstable) {
    d.rank_step = -1;
  }
  if (res.rho_star == rho_lo || diagonal_only) {
    d.sparse_step = -1;
  } else if (res.rho_star == rho_hi || too_dense) {
    d.sparse_step = +1;
  }
  d.stable = !rank_unstable && !diagonal_only && !too_dense;
  return d;
}

bool better_round(const SelectionResult& a, bool a_stable, const SelectionResult& b, bool b_stable) {
  if (a.boundary_flag != b.boundary_flag) return !a.boundary_flag;
  if (a_stable != b_stable) return a_stable;
  return false;
}

}  // namespace

SelectionResult auto_tune(const HermitianMatrix& sigma_tilde, Index sample_size,
                          const ThresholdConfig& initial, const SolverConfig& solver_defaults,
                          unsigned threads) {
  initial.validate();
  const Index p = sigma_tilde.dim();
  ThresholdConfig cfg = initial;
  cfg.r_thr = std::min<int>(cfg.r_thr, static_cast<int>(p));

  std::set<std::pair<int, double>> visited;
  SelectionResult best;
  bool best_stable = false;
  bool have_best = false;
  const int rounds = std::max(1, initial.max_outer);
  int rounds_run = 0;

  for (int round = 1; round <= rounds; ++round) {
    rounds_run = round;
    visited.emplace(cfg.r_thr, cfg.s_thr);
    SelectionResult res = search_thresholds(sigma_tilde, sample_size, cfg, solver_defaults, threads);
    const RoundDiagnosis d = diagnose(res, p);

    if (admissible(res) && (!have_best || better_round(res, d.stable, best, best_stable))) {
      best = res;
      best_stable = d.stable;
      have_best = true;
    }
    if (d.rank_step == 0 && d.sparse_step == 0) break;

    ThresholdConfig next = cfg;
    if (d.rank_step < 0) next.r_thr = std::max(1, next.r_thr / 2);
    if (d.rank_step > 0) next.r_thr = std::min<int>(static_cast<int>(p), next.r_thr * 2);
    if (d.sparse_step < 0) next.s_thr *= 0.5;
    if (d.sparse_step > 0) next.s_thr *= 2.0;
    if (visited.count({next.r_thr, next.s_thr}) != 0) break;
    cfg = next;
  }
  if (!have_best) throw NoAdmissibleSolution("auto_tune: no admissible solution in any round");
  best.rounds = rounds_run;
  return best;
}

void write_grid_trace_csv(std::ostream& os, const std::vector<GridCell>& trace) {
  const auto old_precision = os.precision(17);
  os << "psi,rho,mc,rank,nonzeros,converged\n";
  for (const GridCell& c : trace) {
    os << c.psi << ',' << c.rho << ',' << c.mc << ',' << c.rank << ',' << c.nonzeros << ','
       << (c.converged ? "true" : "false") << '\n';
  }
  os.precision(old_precision);
}

}  // namespace unalse
