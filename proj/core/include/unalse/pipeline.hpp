#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "unalse/io.hpp"
#include "unalse/periodogram.hpp"
#include "unalse/selection.hpp"
#include "unalse/solver.hpp"
#include "unalse/unshrink.hpp"

namespace unalse {

inline constexpr std::string_view kVersion = "0.1.0";

enum class SelectionMode {
  manual,     ///< fixed psi and rho
  grid,       ///< one select_thresholds round
  auto_tune,  ///< select_thresholds inside the r_thr / s_thr outer loop
};

std::string_view to_string(SelectionMode mode);

struct PipelineConfig {
  KernelSpec kernel;
  /// Lag-window bandwidth; floor(sqrt(T)) when unset.
  std::optional<Index> bandwidth;
  /// Frequencies to estimate at; theta_h = h pi / M_T, h = 0..M_T when unset.
  std::optional<FrequencyGrid> grid;
  bool demean = true;
  SelectionMode selection = SelectionMode::auto_tune;
  ThresholdConfig thresholds;
  /// psi and rho are read from here in manual mode; the remaining fields
  /// apply to every solver run.
  SolverConfig solver;
  DiagonalRule diagonal_rule = DiagonalRule::preserve_total;
  bool with_inverse = false;
  bool keep_sigma_tilde = true;
  unsigned threads = 1;
};

struct FrequencyEstimate {
  double theta = 0.0;
  HermitianMatrix sigma_tilde;
  AlseSolution solution;
  UnalseEstimate estimate;
  double psi = 0.0;  ///< selected (or manual) threshold before Gini adaptation
  double rho = 0.0;
  std::optional<double> mc;
  bool boundary = false;
  std::optional<HermitianMatrix> S_inverse;
  std::optional<HermitianMatrix> sigma_inverse;
};

struct PipelineResult {
  Index p = 0;
  Index T = 0;
  Index bandwidth = 0;
  FrequencyGrid grid;
  std::vector<FrequencyEstimate> cells;
};

/// Splits one periodogram matrix: selection (or the manual thresholds),
/// then unshrinkage with the final effective psi.
FrequencyEstimate estimate_frequency(const HermitianMatrix& sigma_tilde, double theta,
                                     Index sample_size, const PipelineConfig& config,
                                     unsigned threads = 1);

/// Smoothed periodogram followed by estimate_frequency at every grid point.
/// Frequencies run on up to config.threads workers; results do not depend on
/// the thread count.
PipelineResult estimate_spectrum(const TimeSeriesPanel& panel, const PipelineConfig& config);

EstimateBundle to_bundle(const PipelineResult& result, const PipelineConfig& config,
                         std::optional<std::uint64_t> seed, std::string source);

}  // namespace unalse
