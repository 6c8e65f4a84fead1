#include "unalse/solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "unalse/errors.hpp"

namespace unalse {

void SolverConfig::validate() const {
  if (!(psi > 0.0)) throw ArgumentError("SolverConfig: psi must be > 0");
  if (!(rho > 0.0)) throw ArgumentError("SolverConfig: rho must be > 0");
  if (!(varsigma > 0.0)) throw ArgumentError("SolverConfig: varsigma must be > 0");
  if (max_iterations < 1) throw ArgumentError("SolverConfig: max_iterations must be >= 1");
  if (!(gini_floor > 0.0 && gini_floor <= 1.0)) {
    throw ArgumentError("SolverConfig: gini_floor must lie in (0, 1]");
  }
}

namespace {

HermitianMatrix threshold_spectrum(const EigenDecomposition& ed, double psi, Index& rank_out) {
  RVector shrunk = (ed.eigenvalues.array() - psi).cwiseMax(0.0);
  rank_out = static_cast<Index>((shrunk.array() > 0.0).count());
  return ed.rebuild(shrunk);
}

}  // namespace

HermitianMatrix svt(const HermitianMatrix& m, double psi, Index& rank_out) {
  if (psi < 0.0 || std::isnan(psi)) throw ArgumentError("svt: psi must be >= 0");
  return threshold_spectrum(eigh(m), psi, rank_out);
}

HermitianMatrix svt(const HermitianMatrix& m, double psi) {
  Index rank = 0;
  return svt(m, psi, rank);
}

HermitianMatrix soft_threshold(const HermitianMatrix& m, double rho) {
  if (rho < 0.0 || std::isnan(rho)) throw ArgumentError("soft_threshold: rho must be >= 0");
  CMatrix out = m.matrix();
  for (Index j = 0; j < out.cols(); ++j) {
    for (Index i = 0; i < out.rows(); ++i) {
      const double mod = std::abs(out(i, j));
      out(i, j) = mod > rho ? out(i, j) * ((mod - rho) / mod) : Complex(0.0, 0.0);
    }
  }
  return hermitize(out);
}

double objective(const HermitianMatrix& sigma_tilde, const HermitianMatrix& low_rank,
                 const HermitianMatrix& sparse, double psi, double rho) {
  if (sigma_tilde.dim() != low_rank.dim() || sigma_tilde.dim() != sparse.dim()) {
    throw DimensionError("objective: dimension mismatch");
  }
  const double fit = (sigma_tilde.matrix() - low_rank.matrix() - sparse.matrix()).squaredNorm();
  return 0.5 * fit + psi * low_rank.trace() + rho * sparse.matrix().cwiseAbs().sum();
}

double gini(const RVector& values) {
  const Index n = values.size();
  if (n == 0) throw DegenerateInput("gini: empty vector");
  if ((values.array() < 0.0).any()) throw ArgumentError("gini: values must be nonnegative");
  const double total = values.sum();
  if (!(total > 0.0)) throw DegenerateInput("gini: all values are zero");

  // Sorted form of sum_i sum_j |v_i - v_j|: 2 sum_i (2i - n - 1) v_(i).
  RVector sorted = values;
  std::sort(sorted.begin(), sorted.end());
  double acc = 0.0;
  for (Index i = 0; i < n; ++i) acc += static_cast<double>(2 * (i + 1) - n - 1) * sorted(i);
  return std::clamp(acc / (static_cast<double>(n) * total), 0.0, 1.0);
}

Index count_offdiag_nonzeros(const HermitianMatrix& m, double zero_tol) {
  Index count = 0;
  for (Index j = 1; j < m.dim(); ++j) {
    for (Index i = 0; i < j; ++i) {
      if (std::abs(m(i, j)) > zero_tol) ++count;
    }
  }
  return count;
}

AlseSolution alse_solve(const HermitianMatrix& sigma_tilde, const SolverConfig& config,
                        const std::optional<SolverStart>& start) {
  config.validate();
  const Index p = sigma_tilde.dim();
  if (p == 0) throw DimensionError("alse_solve: empty input");
  if ((sigma_tilde.diag().array() < 0.0).any()) {
    throw ArgumentError("alse_solve: input must have a nonnegative diagonal");
  }

  HermitianMatrix l_prev;
  HermitianMatrix s_prev;
  if (start) {
    if (start->L0.dim() != p || start->S0.dim() != p) {
      throw DimensionError("alse_solve: warm start dimension mismatch");
    }
    l_prev = start->L0;
    s_prev = start->S0;
  } else {
    l_prev = HermitianMatrix::diagonal(0.5 * sigma_tilde.diag());
    s_prev = l_prev;
  }
  HermitianMatrix y = l_prev;
  HermitianMatrix z = s_prev;
  double eta = 1.0;

  AlseSolution out;
  out.psi_effective = config.psi;
  HermitianMatrix l_cur = l_prev;
  HermitianMatrix s_cur = s_prev;

  for (int k = 1; k <= config.max_iterations; ++k) {
    const HermitianMatrix half_grad = 0.5 * (y + z - sigma_tilde);
    const HermitianMatrix e_y = y - half_grad;
    const HermitianMatrix e_z = z - half_grad;

    const EigenDecomposition ed = eigh(e_y);
    double psi_k = config.psi;
    if (config.gini_adaptation) {
      const RVector clamped = ed.eigenvalues.cwiseMax(0.0);
      // A spectrum with no positive part is annihilated by any psi.
      if (clamped.sum() > 0.0) psi_k = config.psi / std::max(gini(clamped), config.gini_floor);
    }
    Index rank = 0;
    l_cur = threshold_spectrum(ed, psi_k, rank);
    s_cur = soft_threshold(e_z, config.rho);

    const double eta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * eta * eta));
    const double momentum = (eta - 1.0) / eta_next;
    y = l_cur + momentum * (l_cur - l_prev);
    z = s_cur + momentum * (s_cur - s_prev);

    const double change = (l_cur - l_prev).matrix().norm() / (1.0 + l_prev.matrix().norm()) +
                          (s_cur - s_prev).matrix().norm() / (1.0 + s_prev.matrix().norm());

    out.iterations = k;
    out.rank = rank;
    out.psi_effective = psi_k;
    l_prev = l_cur;
    s_prev = s_cur;
    eta = eta_next;
    if (change <= config.varsigma) {
      out.converged = true;
      break;
    }
  }

  out.L_hat = l_cur;
  out.S_hat = s_cur;
  out.sigma_hat = l_cur + s_cur;
  out.nonzero_count = count_offdiag_nonzeros(s_cur, config.zero_tol);
  out.objective_value = objective(sigma_tilde, l_cur, s_cur, config.psi, config.rho);
  out.Y_last = y;
  out.Z_last = z;
  return out;
}

}  // namespace unalse
