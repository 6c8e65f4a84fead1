#include "unalse/hermitian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "unalse/errors.hpp"

#ifdef UNALSE_HAVE_LAPACKE
#include <lapacke.h>
#endif

namespace unalse {

namespace {

void require_square(Index rows, Index cols, const char* who) {
  if (rows != cols) {
    throw DimensionError(std::string(who) + ": expected a square matrix, got " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
}

CMatrix symmetrize(const CMatrix& m) {
  CMatrix out = (m + m.adjoint()) * 0.5;
  for (Index i = 0; i < out.rows(); ++i) out(i, i) = Complex(out(i, i).real(), 0.0);
  return out;
}

bool is_hermitian(const CMatrix& m, double tol) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i <= j; ++i) {
      if (std::abs(m(i, j) - std::conj(m(j, i))) > tol * scale) return false;
    }
  }
  return true;
}

bool all_finite(const CMatrix& m) {
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
    }
  }
  return true;
}

}  // namespace

HermitianMatrix::HermitianMatrix(const CMatrix& m, double tol) {
  require_square(m.rows(), m.cols(), "HermitianMatrix");
  if (!is_hermitian(m, tol)) {
    throw ArgumentError("HermitianMatrix: input is not Hermitian within tolerance");
  }
  m_ = symmetrize(m);
}

HermitianMatrix::HermitianMatrix(const RMatrix& m, double tol)
    : HermitianMatrix(CMatrix(m.cast<Complex>()), tol) {}

HermitianMatrix HermitianMatrix::zeros(Index p) {
  return HermitianMatrix(Trusted{}, CMatrix::Zero(p, p));
}

HermitianMatrix HermitianMatrix::identity(Index p) {
  return HermitianMatrix(Trusted{}, CMatrix::Identity(p, p));
}

HermitianMatrix HermitianMatrix::diagonal(const RVector& d) {
  CMatrix m = CMatrix::Zero(d.size(), d.size());
  m.diagonal() = d.cast<Complex>();
  return HermitianMatrix(Trusted{}, std::move(m));
}

HermitianMatrix operator+(const HermitianMatrix& a, const HermitianMatrix& b) {
  if (a.dim() != b.dim()) throw DimensionError("HermitianMatrix: dimension mismatch in +");
  return HermitianMatrix(HermitianMatrix::Trusted{}, a.m_ + b.m_);
}

HermitianMatrix operator-(const HermitianMatrix& a, const HermitianMatrix& b) {
  if (a.dim() != b.dim()) throw DimensionError("HermitianMatrix: dimension mismatch in -");
  return HermitianMatrix(HermitianMatrix::Trusted{}, a.m_ - b.m_);
}

HermitianMatrix operator*(double s, const HermitianMatrix& a) {
  return HermitianMatrix(HermitianMatrix::Trusted{}, s * a.m_);
}

HermitianMatrix hermitize(const CMatrix& m) {
  require_square(m.rows(), m.cols(), "hermitize");
  return HermitianMatrix(HermitianMatrix::Trusted{}, symmetrize(m));
}

HermitianMatrix hermitize(const RMatrix& m) { return hermitize(CMatrix(m.cast<Complex>())); }

HermitianMatrix EigenDecomposition::rebuild(const RVector& values) const {
  if (values.size() != eigenvalues.size()) {
    throw DimensionError("EigenDecomposition::rebuild: spectrum length mismatch");
  }
  const CMatrix scaled = eigenvectors * values.cast<Complex>().asDiagonal();
  return hermitize(CMatrix(scaled * eigenvectors.adjoint()));
}

EigenDecomposition eigh(const HermitianMatrix& m) {
  const CMatrix& a = m.matrix();
  if (!all_finite(a)) throw NumericError("eigh: matrix has non-finite entries");
  const Index p = a.rows();
  EigenDecomposition out;
  if (p == 0) return out;

#ifdef UNALSE_HAVE_LAPACKE
  CMatrix work = a;
  RVector w(p);
  const lapack_int info =
      LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'U', static_cast<lapack_int>(p),
                     reinterpret_cast<lapack_complex_double*>(work.data()), static_cast<lapack_int>(p),
                     w.data());
  if (info != 0) throw NumericError("eigh: zheevd failed with info " + std::to_string(info));
  out.eigenvalues = w.reverse();
  out.eigenvectors = work.rowwise().reverse();
#else
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(a, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw NumericError("eigh: eigensolver did not converge");

  // Ascending order from the solver; flip to descending.
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
#endif

  for (Index j = 0; j < p; ++j) {
    auto col = out.eigenvectors.col(j);
    Index arg = 0;
    double best = -1.0;
    for (Index i = 0; i < p; ++i) {
      // Tolerance keeps the pivot stable when two moduli agree to rounding.
      const double mod = std::abs(col(i));
      if (mod > best * (1.0 + 1e-12)) {
        best = mod;
        arg = i;
      }
    }
    if (best > 0.0) col *= std::conj(col(arg)) / best;
    col(arg) = Complex(col(arg).real(), 0.0);
  }
  return out;
}

NormKind parse_norm_kind(std::string_view name) {
  static constexpr std::pair<std::string_view, NormKind> kTable[] = {
      {"l0", NormKind::l0},           {"l1", NormKind::l1},         {"frobenius", NormKind::frobenius},
      {"max", NormKind::max},         {"l0v", NormKind::l0v},       {"l1v", NormKind::l1v},
      {"linfv", NormKind::linfv},     {"spectral", NormKind::spectral},
      {"nuclear", NormKind::nuclear}, {"min_off", NormKind::min_off},
  };
  for (const auto& [key, kind] : kTable) {
    if (key == name) return kind;
  }
  throw ArgumentError("unknown norm kind '" + std::string(name) + "'");
}

std::string_view to_string(NormKind kind) {
  switch (kind) {
    case NormKind::l0: return "l0";
    case NormKind::l1: return "l1";
    case NormKind::frobenius: return "frobenius";
    case NormKind::max: return "max";
    case NormKind::l0v: return "l0v";
    case NormKind::l1v: return "l1v";
    case NormKind::linfv: return "linfv";
    case NormKind::spectral: return "spectral";
    case NormKind::nuclear: return "nuclear";
    case NormKind::min_off: return "min_off";
  }
  return "unknown";
}

double matrix_norm(const CMatrix& m, NormKind kind, double zero_tol) {
  const RMatrix mod = m.cwiseAbs();
  switch (kind) {
    case NormKind::l0:
      return static_cast<double>((mod.array() > zero_tol).count());
    case NormKind::l1:
      return mod.sum();
    case NormKind::frobenius:
      return m.norm();
    case NormKind::max:
      return mod.size() == 0 ? 0.0 : mod.maxCoeff();
    case NormKind::l0v: {
      double best = 0.0;
      for (Index i = 0; i < mod.rows(); ++i) {
        best = std::max(best, static_cast<double>((mod.row(i).array() > zero_tol).count()));
      }
      return best;
    }
    case NormKind::l1v:
      return mod.size() == 0 ? 0.0 : mod.colwise().sum().maxCoeff();
    case NormKind::linfv:
      return mod.size() == 0 ? 0.0 : mod.rowwise().sum().maxCoeff();
    case NormKind::spectral: {
      if (m.size() == 0) return 0.0;
      if (m.rows() == m.cols() && is_hermitian(m, kHermitianTolerance)) {
        const RVector ev = Eigen::SelfAdjointEigenSolver<CMatrix>(symmetrize(m), Eigen::EigenvaluesOnly)
                               .eigenvalues();
        return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
      }
      return Eigen::JacobiSVD<CMatrix>(m).singularValues()(0);
    }
    case NormKind::nuclear: {
      require_square(m.rows(), m.cols(), "matrix_norm(nuclear)");
      if (!is_hermitian(m, kHermitianTolerance)) {
        throw NumericError("matrix_norm(nuclear): input is not Hermitian");
      }
      if (m.size() == 0) return 0.0;
      const RVector ev =
          Eigen::SelfAdjointEigenSolver<CMatrix>(symmetrize(m), Eigen::EigenvaluesOnly).eigenvalues();
      const double radius = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
      if (ev(0) < -1e-10 * std::max(1.0, radius)) {
        throw NumericError("matrix_norm(nuclear): input is not positive semidefinite");
      }
      return m.diagonal().real().sum();
    }
    case NormKind::min_off: {
      double best = std::numeric_limits<double>::infinity();
      for (Index j = 0; j < mod.cols(); ++j) {
        for (Index i = 0; i < mod.rows(); ++i) {
          if (i != j && mod(i, j) > zero_tol) best = std::min(best, mod(i, j));
        }
      }
      if (!std::isfinite(best)) throw DegenerateInput("matrix_norm(min_off): no nonzero off-diagonal");
      return best;
    }
  }
  throw ArgumentError("matrix_norm: unknown norm kind");
}

double min_eigenvalue(const HermitianMatrix& m) {
  if (m.dim() == 0) throw DimensionError("min_eigenvalue: empty matrix");
  if (!all_finite(m.matrix())) throw NumericError("min_eigenvalue: matrix has non-finite entries");
  return Eigen::SelfAdjointEigenSolver<CMatrix>(m.matrix(), Eigen::EigenvaluesOnly).eigenvalues()(0);
}

bool is_positive_definite(const HermitianMatrix& m, double tol) { return min_eigenvalue(m) > tol; }

HermitianMatrix inverse_if_pd(const HermitianMatrix& m, double tol) {
  const EigenDecomposition ed = eigh(m);
  const double lo = ed.eigenvalues.size() ? ed.eigenvalues(ed.eigenvalues.size() - 1) : 0.0;
  if (!(lo > tol)) {
    throw NotPositiveDefinite("inverse_if_pd: matrix is not positive definite (min eigenvalue " +
                                  std::to_string(lo) + ")",
                              lo);
  }
  return ed.rebuild(ed.eigenvalues.cwiseInverse());
}

Index numerical_rank(const HermitianMatrix& m, double tol) {
  if (m.dim() == 0) return 0;
  const RVector ev =
      Eigen::SelfAdjointEigenSolver<CMatrix>(m.matrix(), Eigen::EigenvaluesOnly).eigenvalues();
  return static_cast<Index>((ev.array() > tol).count());
}

}  // namespace unalse
