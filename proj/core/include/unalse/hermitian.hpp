#pragma once

#include <complex>
#include <string_view>

#include <Eigen/Dense>

namespace unalse {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kHermitianTolerance = 1e-12;
inline constexpr double kDefaultZeroTolerance = 1e-12;

/// A p x p complex Hermitian matrix.
///
/// Construction from an arbitrary matrix checks the Hermitian invariant
/// (relative to the largest entry modulus) and then stores the exactly
/// symmetrized matrix, so every stored instance satisfies
/// m(i, j) == conj(m(j, i)) bit for bit and has a real diagonal.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;

  /// Throws DimensionError for non-square input and ArgumentError when the
  /// input is not Hermitian within `tol`.
  explicit HermitianMatrix(const CMatrix& m, double tol = kHermitianTolerance);
  explicit HermitianMatrix(const RMatrix& m, double tol = kHermitianTolerance);

  static HermitianMatrix zeros(Index p);
  static HermitianMatrix identity(Index p);
  static HermitianMatrix diagonal(const RVector& d);

  Index dim() const noexcept { return m_.rows(); }
  const CMatrix& matrix() const noexcept { return m_; }
  Complex operator()(Index i, Index j) const { return m_(i, j); }

  /// Real diagonal as a vector.
  RVector diag() const { return m_.diagonal().real(); }
  double trace() const { return m_.diagonal().real().sum(); }

  friend HermitianMatrix operator+(const HermitianMatrix& a, const HermitianMatrix& b);
  friend HermitianMatrix operator-(const HermitianMatrix& a, const HermitianMatrix& b);
  friend HermitianMatrix operator*(double s, const HermitianMatrix& a);

  bool operator==(const HermitianMatrix& other) const {
    return m_.rows() == other.m_.rows() && m_ == other.m_;
  }

 private:
  friend HermitianMatrix hermitize(const CMatrix& m);

  struct Trusted {};
  HermitianMatrix(Trusted, CMatrix m) : m_(std::move(m)) {}

  CMatrix m_;
};

/// Returns (M + M^H) / 2 with an exactly real diagonal. Idempotent on
/// Hermitian input. Throws DimensionError when M is not square.
HermitianMatrix hermitize(const CMatrix& m);
HermitianMatrix hermitize(const RMatrix& m);

/// Full spectral decomposition, eigenvalues sorted non-increasing.
/// Each eigenvector is phase-normalized so that its largest-modulus
/// component is real and positive (first such component on ties).
struct EigenDecomposition {
  RVector eigenvalues;
  CMatrix eigenvectors;

  /// U diag(f(lambda)) U^H for a transformed spectrum.
  HermitianMatrix rebuild(const RVector& values) const;
};

/// Throws NumericError on non-finite entries.
EigenDecomposition eigh(const HermitianMatrix& m);

enum class NormKind {
  l0,        ///< number of nonzero entries
  l1,        ///< sum of entry moduli
  frobenius,
  max,       ///< largest entry modulus
  l0v,       ///< largest per-row nonzero count
  l1v,       ///< largest column modulus sum
  linfv,     ///< largest row modulus sum
  spectral,  ///< largest singular value
  nuclear,   ///< trace; PSD input only
  min_off,   ///< smallest nonzero off-diagonal modulus
};

NormKind parse_norm_kind(std::string_view name);
std::string_view to_string(NormKind kind);

/// Matrix norms in the element-wise / vector-induced family. Entries with
/// modulus <= zero_tol count as zero for l0, l0v and min_off.
///
/// nuclear throws NumericError when the matrix is not Hermitian PSD (an
/// eigenvalue below -1e-10 relative to the spectral radius); min_off throws
/// DegenerateInput when every off-diagonal entry is zero.
double matrix_norm(const CMatrix& m, NormKind kind, double zero_tol = kDefaultZeroTolerance);
inline double matrix_norm(const HermitianMatrix& m, NormKind kind,
                          double zero_tol = kDefaultZeroTolerance) {
  return matrix_norm(m.matrix(), kind, zero_tol);
}

double min_eigenvalue(const HermitianMatrix& m);

/// True iff the smallest eigenvalue exceeds tol.
bool is_positive_definite(const HermitianMatrix& m, double tol = 0.0);

/// Inverse through the eigendecomposition. Throws NotPositiveDefinite
/// (carrying the smallest eigenvalue) when the PD gate fails.
HermitianMatrix inverse_if_pd(const HermitianMatrix& m, double tol = 0.0);

/// Number of eigenvalues strictly above tol.
Index numerical_rank(const HermitianMatrix& m, double tol = kDefaultZeroTolerance);

}  // namespace unalse
