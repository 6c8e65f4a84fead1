#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "unalse/hermitian.hpp"
#include "unalse/periodogram.hpp"

namespace unalse {

/// Basic filters share one scalar lag profile; general filters perturb it
/// per latent direction and draw a separate sparse residual per lag.
enum class FilterScenario { basic, general };

struct SimulationConfig {
  Index p = 50;
  Index T = 500;
  Index r = 2;
  double c = 2.0;           ///< condition number of the latent eigenvalues
  double beta = 0.6;        ///< latent variance proportion
  double tau = 1.0;         ///< overall scale
  double delta = 0.9;       ///< Cauchy-Schwarz fraction for residual off-diagonals
  double delta_bis = 0.5;   ///< survival proportion of the largest off-diagonal
  std::vector<double> lambda_coeffs{0.8, 0.2};
  bool normalize_lambda = false;
  /// Attach an equiprobable sign to each residual off-diagonal magnitude.
  bool signed_offdiagonals = true;
  FilterScenario scenario = FilterScenario::basic;
  double kappa_pert = 0.1;
  std::uint64_t seed = 1;
  /// Burn-in length; negative means 50 + n_l.
  Index burn_in = -1;
  FrequencyGrid grid = FrequencyGrid::fractions_of_pi(12, 5);

  Index lags() const { return static_cast<Index>(lambda_coeffs.size()) - 1; }
  /// Lag coefficients after the optional unit-sum-of-squares normalization.
  std::vector<double> effective_lambda() const;
  void validate() const;
};

struct FilterBank {
  std::vector<RMatrix> B;  ///< p x r latent filters, lag 0..n_l
  std::vector<RMatrix> C;  ///< p x p residual filters, lag 0..n_l
};

struct LowRankStar {
  RMatrix L_star;
  RMatrix U_L;
  RVector Lambda_u;  ///< descending, equidistant
};

struct SimulationTruth {
  SimulationConfig config;
  TimeSeriesPanel panel{RMatrix::Zero(1, 2)};
  std::vector<HermitianMatrix> L_true;
  std::vector<HermitianMatrix> S_true;
  RMatrix L_star;  ///< U_L Lambda_u U_L'
  RMatrix S_star;  ///< residual target (lag-0 residual matrix for general filters)
  FilterBank filters;
};

/// Gram-Schmidt on the columns of a random permutation matrix mixed with a
/// Gaussian matrix, then r randomly drawn columns. Throws ArgumentError for r > p.
RMatrix orthonormal_basis(Index p, Index r, std::uint64_t seed);

/// Latent target with equidistant eigenvalues, ratio c, trace tau beta p.
/// Throws ArgumentError when r = 1 and c != 1, or c < 1.
LowRankStar gen_low_rank_star(Index p, Index r, double c, double beta, double tau,
                              std::uint64_t seed);

/// Sparse residual target: Dirichlet(1) diagonal of total (1 - beta) tau p
/// ordered like diag(L_star), off-diagonal magnitudes Uniform(0, delta
/// sqrt(S_ii S_jj)), entries below delta_bis times the largest magnitude
/// zeroed, then PSD-repaired by a diagonal shift and a trace-restoring
/// rescale.
RMatrix gen_sparse_star(Index p, double beta, double tau, double delta, double delta_bis,
                        const RMatrix& L_star, std::uint64_t seed, bool signed_offdiagonals = true);

/// B_s = U_L sqrt(Lambda_u) lambda_s, C_s = U_S sqrt(Lambda_e) lambda_s with
/// S_star = U_S Lambda_e U_S'. Throws NumericError when S_star is not PSD.
FilterBank build_filters_basic(const RMatrix& U_L, const RVector& Lambda_u, const RMatrix& S_star,
                               const std::vector<double>& lambda_coeffs);

/// B_s = U_L D_{L,s} sqrt(Lambda_u) with diag(D_{L,s}) = lambda_s (1 - k + 2 k w),
/// w ~ Uniform(0,1)^r; residual lag s built from its own sparse matrix with
/// diagonal total (1 - beta) tau p |lambda_s|, factored as U diag(l) U' and
/// C_s = sign(lambda_s) U diag(sqrt l).
FilterBank build_filters_general(const RMatrix& U_L, const RVector& Lambda_u, double beta,
                                 double tau, const std::vector<double>& lambda_coeffs,
                                 double kappa_pert, double delta, double delta_bis,
                                 std::uint64_t seed, bool signed_offdiagonals = true);

/// X_t = sum_s B_s u_{t-s} + sum_s C_s e_{t-s} with independent standard
/// Gaussian u, e. The first burn_in draws are discarded. Throws
/// ArgumentError when burn_in < n_l or the filters disagree in shape.
TimeSeriesPanel vma_generate(const FilterBank& filters, Index T, Index burn_in, std::uint64_t seed);

struct TrueSpectra {
  std::vector<HermitianMatrix> L;
  std::vector<HermitianMatrix> S;
};

/// Spectral densities of the two VMA components on the grid, in the same
/// lag convention as the smoothed periodogram:
///   L(theta) = (1/2pi) A(theta) A(theta)^H,  A(theta) = sum_s B_s e^{i s theta},
/// and likewise for S with C_s.
TrueSpectra true_spectra(const FilterBank& filters, const FrequencyGrid& grid);

/// Seed of replication b drawn from a study-level base seed.
std::uint64_t replication_seed(std::uint64_t base, std::uint64_t b);

/// Full generation for one replication.
SimulationTruth simulate(const SimulationConfig& config);

FilterScenario parse_scenario_filters(std::string_view name);

/// Named presets. Scenario A uses basic filters, B general filters with a
/// very sparse residual, C general filters with a denser residual. Settings
/// 1-3 use p = 100, T = 1000; setting 4 p = T = 150; setting 5 p = 200,
/// T = 100. The remaining magnitudes are documented defaults.
SimulationConfig scenario_preset(char scenario, int setting);

/// p = 50, T = 500, r = 2 basic-filter study on theta_h = pi h / 12, h = 0..5,
/// with beta = 0.4, tau = 3, c = 2, delta = 0.9 and delta_bis = 0.5.
SimulationConfig desk_scale_preset();

}  // namespace unalse
