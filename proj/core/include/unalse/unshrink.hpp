#pragma once

#include <string_view>

#include "unalse/hermitian.hpp"
#include "unalse/solver.hpp"

namespace unalse {

/// Which low-rank diagonal the residual diagonal is repaired against.
enum class DiagonalRule {
  /// diag(S_u) = diag(Sigma_hat) - diag(L_u): total diagonal preserved.
  preserve_total,
  /// diag(S_u) = diag(Sigma_hat) - diag(L_hat): literal shrunk-L reading.
  shrunk_latent,
};

DiagonalRule parse_diagonal_rule(std::string_view name);
std::string_view to_string(DiagonalRule rule);

struct UnalseEstimate {
  HermitianMatrix L_u;
  HermitianMatrix S_u;
  HermitianMatrix sigma_u;  ///< L_u + S_u
  double psi_used = 0.0;
  Index rank = 0;
  bool S_positive_definite = false;
  bool sigma_positive_definite = false;
};

/// Gives psi back to the retained latent eigenvalues,
///   L_u = W (D + psi I_r) W^H
/// over the top solution.rank eigenpairs of L_hat, keeps the off-diagonal
/// of S_hat and rebuilds the residual diagonal by difference. A negative
/// repaired diagonal is reported through the PD flags, never clamped.
/// Throws ArgumentError for psi <= 0.
UnalseEstimate unshrink(const AlseSolution& solution, double psi,
                        DiagonalRule rule = DiagonalRule::preserve_total);

}  // namespace unalse
