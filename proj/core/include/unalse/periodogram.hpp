#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "unalse/hermitian.hpp"

namespace unalse {

/// p x T panel of real observations; column t is the observation vector X_t.
class TimeSeriesPanel {
 public:
  /// Throws ArgumentError unless p >= 1, T >= 2 and every value is finite.
  explicit TimeSeriesPanel(RMatrix values);

  Index series() const noexcept { return values_.rows(); }
  Index length() const noexcept { return values_.cols(); }
  const RMatrix& values() const noexcept { return values_; }

 private:
  RMatrix values_;
};

/// Nonnegative half of a frequency grid in radians, strictly increasing in [0, pi].
struct FrequencyGrid {
  /// Bandwidth the grid was derived from; unset for custom grids.
  std::optional<Index> bandwidth;
  std::vector<double> frequencies;

  std::size_t size() const noexcept { return frequencies.size(); }

  /// theta_h = h * pi / denominator for h = 0..h_max.
  static FrequencyGrid fractions_of_pi(Index denominator, Index h_max);

  /// Throws ArgumentError unless the list is strictly increasing within [0, pi].
  static FrequencyGrid custom(std::vector<double> frequencies);
};

/// theta_h = h * pi / M_T, h = 0..M_T. Throws ArgumentError for M_T = 0.
FrequencyGrid frequency_grid(Index bandwidth);

enum class KernelFamily { bartlett, parzen };

struct KernelSpec {
  KernelFamily family = KernelFamily::bartlett;
};

KernelFamily parse_kernel(std::string_view name);
std::string_view to_string(KernelFamily family);

/// Lag-window weight K(u); even, K(0) = 1, zero outside [-1, 1].
double kernel_weight(const KernelSpec& spec, double u);

/// Gamma_hat(k) = T^-1 sum_{t=1}^{T-|k|} X_t X_{t+k}' on the (optionally
/// demeaned) panel; Gamma_hat(-k) = Gamma_hat(k)'. Throws ArgumentError
/// for |k| >= T.
RMatrix sample_autocov(const TimeSeriesPanel& panel, Index lag, bool demean);

/// Default bandwidth floor(sqrt(T)).
Index default_bandwidth(Index sample_size);

/// Lag-window smoothed periodogram on theta_h = h pi / M_T, h = 0..M_T.
/// Throws ArgumentError when M_T = 0 or M_T >= T.
std::vector<HermitianMatrix> smoothed_periodogram(const TimeSeriesPanel& panel,
                                                  const KernelSpec& spec, Index bandwidth,
                                                  bool demean = true);

/// Same estimator evaluated on an arbitrary grid (e.g. pi h / 12).
/// Frequencies are evaluated in parallel on up to `threads` workers; the
/// output does not depend on the thread count.
std::vector<HermitianMatrix> smoothed_periodogram(const TimeSeriesPanel& panel,
                                                  const KernelSpec& spec, Index bandwidth,
                                                  const FrequencyGrid& grid, bool demean = true,
                                                  unsigned threads = 1);

}  // namespace unalse
