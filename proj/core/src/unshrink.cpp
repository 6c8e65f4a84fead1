#include "unalse/unshrink.hpp"

#include <cmath>
#include <string>

#include "unalse/errors.hpp"

namespace unalse {

DiagonalRule parse_diagonal_rule(std::string_view name) {
  if (name == "preserve-total") return DiagonalRule::preserve_total;
  if (name == "shrunk-latent") return DiagonalRule::shrunk_latent;
  throw ArgumentError("unknown diagonal rule '" + std::string(name) + "'");
}

std::string_view to_string(DiagonalRule rule) {
  return rule == DiagonalRule::preserve_total ? "preserve-total" : "shrunk-latent";
}

UnalseEstimate unshrink(const AlseSolution& solution, double psi, DiagonalRule rule) {
  if (!(psi > 0.0)) throw ArgumentError("unshrink: psi must be > 0");
  const Index p = solution.L_hat.dim();
  if (solution.S_hat.dim() != p || solution.sigma_hat.dim() != p) {
    throw DimensionError("unshrink: solution components disagree in dimension");
  }
  const Index r = solution.rank;
  if (r < 0 || r > p) throw ArgumentError("unshrink: rank out of range");

  UnalseEstimate out;
  out.psi_used = psi;
  out.rank = r;

  if (r == 0) {
    out.L_u = HermitianMatrix::zeros(p);
  } else {
    const EigenDecomposition ed = eigh(solution.L_hat);
    const auto w = ed.eigenvectors.leftCols(r);
    const RVector d = ed.eigenvalues.head(r).array() + psi;
    out.L_u = hermitize(CMatrix(w * d.cast<Complex>().asDiagonal() * w.adjoint()));
  }

  const RVector target = solution.sigma_hat.diag();
  const RVector latent =
      rule == DiagonalRule::preserve_total ? out.L_u.diag() : solution.L_hat.diag();
  CMatrix s = solution.S_hat.matrix();
  for (Index i = 0; i < p; ++i) s(i, i) = Complex(target(i) - latent(i), 0.0);
  out.S_u = hermitize(s);
  out.sigma_u = out.L_u + out.S_u;

  out.S_positive_definite = is_positive_definite(out.S_u, 0.0);
  out.sigma_positive_definite = is_positive_definite(out.sigma_u, 0.0);
  return out;
}

}  // namespace unalse
