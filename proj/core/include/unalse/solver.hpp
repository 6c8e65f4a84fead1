#pragma once

#include <optional>

#include "unalse/hermitian.hpp"

namespace unalse {

struct SolverConfig {
  double psi = 1.0;       ///< eigenvalue (nuclear-norm) threshold
  double rho = 1.0;       ///< entrywise l1 threshold
  double varsigma = 0.01; ///< relative-change stopping level
  int max_iterations = 500;
  /// Divide psi by the Gini index of the working spectrum at every iteration.
  bool gini_adaptation = true;
  /// Lower bound on the Gini divisor.
  double gini_floor = 0.05;
  /// Modulus at or below which an entry of S counts as zero.
  double zero_tol = kDefaultZeroTolerance;

  /// Throws ArgumentError unless psi, rho, varsigma > 0 and max_iterations >= 1.
  void validate() const;
};

/// Low-rank plus sparse split of one spectral matrix.
struct AlseSolution {
  HermitianMatrix L_hat;
  HermitianMatrix S_hat;
  HermitianMatrix sigma_hat;  ///< L_hat + S_hat
  Index rank = 0;             ///< eigenvalues kept by the last thresholding step
  Index nonzero_count = 0;    ///< nonzero strictly-upper-triangular entries of S_hat
  int iterations = 0;
  bool converged = false;
  double objective_value = 0.0;
  /// Eigenvalue threshold actually applied in the final iteration (differs
  /// from the configured psi under Gini adaptation).
  double psi_effective = 0.0;
  /// Momentum iterates at termination, kept for diagnostics.
  HermitianMatrix Y_last;
  HermitianMatrix Z_last;
};

/// Warm start for alse_solve: (L0, S0) replace the diag(Sigma)/2 split.
struct SolverStart {
  HermitianMatrix L0;
  HermitianMatrix S0;
};

/// Eigenvalue soft-thresholding: U diag(max(lambda - psi, 0)) U^H.
/// Negative eigenvalues map to zero, so the output is PSD for any
/// Hermitian input. Throws ArgumentError for psi < 0.
HermitianMatrix svt(const HermitianMatrix& m, double psi);

/// Same operator, also reporting the number of retained eigenvalues.
HermitianMatrix svt(const HermitianMatrix& m, double psi, Index& rank_out);

/// Entrywise complex soft-thresholding (m / |m|) max(|m| - rho, 0),
/// diagonal included. Throws ArgumentError for rho < 0.
HermitianMatrix soft_threshold(const HermitianMatrix& m, double rho);

/// 1/2 ||Sigma - (L + S)||_F^2 + psi tr(L) + rho ||S||_1.
double objective(const HermitianMatrix& sigma_tilde, const HermitianMatrix& low_rank,
                 const HermitianMatrix& sparse, double psi, double rho);

/// Gini index sum_i sum_j |v_i - v_j| / (2 n sum v) of a nonnegative vector.
/// Throws DegenerateInput when no entry is strictly positive and
/// ArgumentError on negative entries.
double gini(const RVector& values);

/// Accelerated proximal-gradient split of sigma_tilde into a PSD low-rank
/// and a sparse Hermitian part.
///
/// Starts from L0 = S0 = diag(sigma)/2 (or `start`), takes the shared
/// gradient G = Y + Z - sigma, sets L_k = svt(Y - G/2), S_k =
/// soft_threshold(Z - G/2) and extrapolates with the eta_k momentum
/// sequence. Stops once
///   ||L_k - L_{k-1}||_F / (1 + ||L_{k-1}||_F) + ||S_k - S_{k-1}||_F / (1 + ||S_{k-1}||_F)
/// is at most varsigma. Returns the proximal iterates (L_k, S_k); the
/// momentum iterates are recorded in Y_last / Z_last.
///
/// Throws ArgumentError for a non-Hermitian-compatible or invalid config.
AlseSolution alse_solve(const HermitianMatrix& sigma_tilde, const SolverConfig& config,
                        const std::optional<SolverStart>& start = std::nullopt);

/// Number of entries above zero_tol in the strict upper triangle.
Index count_offdiag_nonzeros(const HermitianMatrix& m, double zero_tol = kDefaultZeroTolerance);

}  // namespace unalse
