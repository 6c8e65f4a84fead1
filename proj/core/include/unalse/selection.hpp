#pragma once

#include <iosfwd>
#include <vector>

#include "unalse/hermitian.hpp"
#include "unalse/solver.hpp"

namespace unalse {

/// Magnitude knobs that generate the psi / rho grids.
struct ThresholdConfig {
  int r_thr = 1;       ///< latent rank magnitude guess
  double s_thr = 1.0;  ///< residual sparsity magnitude
  int n_thr = 8;       ///< grid points per threshold
  int max_outer = 10;  ///< auto_tune rounds

  void validate() const;
};

/// One solver run on the threshold grid.
struct GridCell {
  double psi = 0.0;
  double rho = 0.0;
  double mc = 0.0;
  Index rank = 0;
  Index nonzeros = 0;
  bool converged = false;
};

struct SelectionResult {
  double psi_star = 0.0;
  double rho_star = 0.0;
  double mc_value = 0.0;
  AlseSolution solution;
  /// Row-major over (psi index, rho index).
  std::vector<GridCell> grid_trace;
  bool boundary_flag = false;
  /// Magnitudes that produced this grid, and the number of select rounds run.
  int r_thr = 1;
  double s_thr = 1.0;
  int rounds = 1;
};

/// (r_thr / p)^(1/4), the geometric mean of the extreme incoherence values.
double incoherence_proxy(int r_thr, Index p);

/// n_thr points equispaced over [sqrt(p/T) / (2 inc), sqrt(p/T) / inc].
std::vector<double> psi_grid(Index p, Index sample_size, int r_thr, int n_thr);

/// n_thr points equispaced over [s_thr p^(-1/2), s_thr p^(-1/4)].
std::vector<double> gamma_grid(Index p, double s_thr, int n_thr);

/// rho = gamma * sqrt(p/T) / inc for each gamma.
std::vector<double> rho_grid(Index p, Index sample_size, int r_thr, double s_thr, int n_thr);

/// max{ r ||L||_2 / beta, (psi/rho) ||S||_{1,v} / (1 - beta) } with
/// beta = tr(L) / tr(Sigma). Degenerate splits (beta outside (0, 1), or a
/// non-positive total trace) score +infinity.
double mc_criterion(const AlseSolution& solution, double psi, double rho);

/// Solves every (psi, rho) pair of the n_thr x n_thr grid and returns the
/// minimax cell (ties: smallest psi, then smallest rho). Cells run on up to
/// `threads` workers. Throws NoAdmissibleSolution when every cell scores
/// +infinity.
SelectionResult select_thresholds(const HermitianMatrix& sigma_tilde, Index sample_size,
                                  const ThresholdConfig& config, const SolverConfig& solver_defaults,
                                  unsigned threads = 1);

/// Same, on explicit grids (used for order-invariance checks and manual sweeps).
SelectionResult select_on_grid(const HermitianMatrix& sigma_tilde, const std::vector<double>& psis,
                               const std::vector<double>& rhos, const SolverConfig& solver_defaults,
                               unsigned threads = 1);

/// Outer loop over r_thr and s_thr. Each round runs select_thresholds and
/// then
///   - halves r_thr (floor, min 1) when the selected psi is the largest grid
///     value or the rank varies by more than 2 along the selected rho column
///     while being nonzero; doubles it (cap p) when the selected psi is the
///     smallest grid value or the selected rank is zero;
///   - halves s_thr when the selected rho is the smallest grid value or the
///     selected residual is diagonal-only; doubles it when the selected rho
///     is the largest grid value or more than half of the off-diagonal cells
///     are nonzero.
/// A round without an admissible cell doubles r_thr when no cell has a
/// latent part and halves s_thr otherwise.
/// Stops at the first round needing no adjustment, when an adjustment is a
/// no-op or revisits a previous (r_thr, s_thr), or after max_outer rounds.
/// max_outer = 0 runs exactly one select_thresholds round. Returns the best
/// round seen: non-boundary before boundary, then stable before unstable,
/// then earliest. Throws NoAdmissibleSolution when no round had an
/// admissible cell.
SelectionResult auto_tune(const HermitianMatrix& sigma_tilde, Index sample_size,
                          const ThresholdConfig& initial, const SolverConfig& solver_defaults,
                          unsigned threads = 1);

/// CSV with header psi,rho,mc,rank,nonzeros,converged.
void write_grid_trace_csv(std::ostream& os, const std::vector<GridCell>& trace);

}  // namespace unalse
