#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "unalse/hermitian.hpp"

namespace unalse {

/// tr(L) / tr(Sigma). Throws DegenerateInput for a zero trace.
double beta_hat(const HermitianMatrix& low_rank, const HermitianMatrix& sigma);

/// sum_{i<j} |S_ij| / sum_{i<j} |Sigma_ij|. Throws DegenerateInput when Sigma
/// is diagonal.
double zeta_hat(const HermitianMatrix& sparse, const HermitianMatrix& sigma);

/// Upper-triangle recovery rates of a residual sparsity pattern. A rate whose
/// reference set is empty is left unset.
struct PredictiveValues {
  std::optional<double> nzpv;  ///< true nonzeros among predicted nonzeros
  std::optional<double> ppv;   ///< recovered positives among true positives
  std::optional<double> npv;   ///< recovered negatives among true negatives
};

/// Signs are read from real parts; an entry is nonzero when its modulus
/// exceeds tol.
PredictiveValues sparsity_predictive(const HermitianMatrix& S_hat, const HermitianMatrix& S_true,
                                     double tol = kDefaultZeroTolerance);

/// mnz_i = max_{j != i} sum_b 1{|S^(b)_ij| > tol}. Throws ArgumentError on an
/// empty list.
std::vector<Index> mnz(const std::vector<HermitianMatrix>& estimates,
                       double tol = kDefaultZeroTolerance);

/// ||M_hat - M||_F / p.
double err_frobenius(const HermitianMatrix& estimate, const HermitianMatrix& truth, Index p);

/// ||Sigma_hat - Sigma||_F / ||Sigma_tilde - Sigma||_F. Throws DegenerateInput
/// when the input loss is zero.
double err_ratio(const HermitianMatrix& sigma_hat, const HermitianMatrix& sigma_tilde,
                 const HermitianMatrix& sigma_true);

/// max(||S_hat - S||_inf / gamma, ||L_hat - L||_2). Throws ArgumentError for gamma <= 0.
double g_gamma_loss(const HermitianMatrix& L_hat, const HermitianMatrix& L_true,
                    const HermitianMatrix& S_hat, const HermitianMatrix& S_true, double gamma);

/// Rank-r principal part of sigma_tilde (dynamic principal components).
/// Throws ArgumentError unless 1 <= r <= p.
HermitianMatrix dyn_pca(const HermitianMatrix& sigma_tilde, Index r);

/// (1/H) sum_b sum_h 1{rank_hats[b][h] == r_true}, H = frequencies per replication.
double rank_correct_count(const std::vector<std::vector<Index>>& rank_hats, Index r_true);

/// Mean and standard deviation of the defined values in a column; the
/// number of undefined (excluded) values is reported alongside.
struct Summary {
  std::optional<double> mean;
  std::optional<double> sd;
  std::size_t count = 0;
  std::size_t excluded = 0;
};

Summary summarize(const std::vector<std::optional<double>>& values);

/// Everything computed for one replication at one frequency.
struct CellMetrics {
  std::optional<double> beta_hat;
  std::optional<double> zeta_hat;
  Index rank_hat = 0;
  PredictiveValues predictive;
  double err_L = 0.0;
  std::optional<double> err_L_dyn;
  std::optional<double> err_ratio;
  double g_gamma = 0.0;
  double spectral_err_sigma = 0.0;  ///< ||Sigma_hat - Sigma||_2 / p
};

struct EstimateCell {
  HermitianMatrix L;
  HermitianMatrix S;
  HermitianMatrix sigma;
  HermitianMatrix sigma_tilde;
  Index rank = 0;
};

struct TruthCell {
  HermitianMatrix L;
  HermitianMatrix S;
};

struct MetricOptions {
  double zero_tol = kDefaultZeroTolerance;
  double gamma = 1.0;
  /// Rank for the dynamic-PCA baseline; 0 disables it.
  Index dyn_rank = 0;
};

CellMetrics evaluate_cell(const EstimateCell& estimate, const TruthCell& truth,
                          const MetricOptions& options);

/// Replication x frequency evaluation with per-frequency summaries.
struct EvaluationReport {
  std::vector<double> frequencies;
  Index p = 0;
  Index r_true = 0;
  std::size_t replications = 0;
  /// cells[b][h]
  std::vector<std::vector<CellMetrics>> cells;
  /// mnz[h][i]
  std::vector<std::vector<Index>> mnz;
  double rank_correct = 0.0;

  /// Named per-frequency summary of one metric ("beta_hat", "zeta_hat",
  /// "rank_hat", "nzpv", "ppv", "npv", "err_L", "err_L_dyn", "err_ratio",
  /// "g_gamma", "spectral_err_sigma").
  std::vector<Summary> per_frequency(const std::string& metric) const;

  static const std::vector<std::string>& metric_names();
};

/// estimates[b][h], truths[b][h]. Throws DimensionError on ragged input.
EvaluationReport evaluate(const std::vector<std::vector<EstimateCell>>& estimates,
                          const std::vector<std::vector<TruthCell>>& truths,
                          const std::vector<double>& frequencies, Index r_true,
                          const MetricOptions& options);

/// JSON document with per-frequency mean / sd / excluded counts, mnz vectors
/// and the rank-recovery count.
std::string report_to_json(const EvaluationReport& report);

/// One row per frequency: theta,f,mean,sd,count,excluded.
void write_metric_csv(std::ostream& os, const EvaluationReport& report, const std::string& metric);

}  // namespace unalse
