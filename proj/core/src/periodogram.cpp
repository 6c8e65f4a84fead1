#include "unalse/periodogram.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "unalse/errors.hpp"
#include "unalse/parallel.hpp"

namespace unalse {

TimeSeriesPanel::TimeSeriesPanel(RMatrix values) : values_(std::move(values)) {
  if (values_.rows() < 1) throw ArgumentError("TimeSeriesPanel: need at least one series");
  if (values_.cols() < 2) throw ArgumentError("TimeSeriesPanel: need at least two observations");
  if (!values_.allFinite()) throw ArgumentError("TimeSeriesPanel: values must be finite");
}

FrequencyGrid FrequencyGrid::fractions_of_pi(Index denominator, Index h_max) {
  if (denominator < 1) throw ArgumentError("frequency grid: denominator must be >= 1");
  if (h_max < 0 || h_max > denominator) {
    throw ArgumentError("frequency grid: h_max must lie in [0, denominator]");
  }
  FrequencyGrid grid;
  grid.frequencies.reserve(static_cast<std::size_t>(h_max + 1));
  for (Index h = 0; h <= h_max; ++h) {
    grid.frequencies.push_back(h == denominator ? std::numbers::pi
                                                : std::numbers::pi * static_cast<double>(h) /
                                                      static_cast<double>(denominator));
  }
  return grid;
}

FrequencyGrid FrequencyGrid::custom(std::vector<double> frequencies) {
  if (frequencies.empty()) throw ArgumentError("frequency grid: empty");
  for (std::size_t i = 0; i < frequencies.size(); ++i) {
    const double f = frequencies[i];
    if (!(f >= 0.0 && f <= std::numbers::pi)) {
      throw ArgumentError("frequency grid: frequencies must lie in [0, pi]");
    }
    if (i > 0 && !(f > frequencies[i - 1])) {
      throw ArgumentError("frequency grid: frequencies must be strictly increasing");
    }
  }
  FrequencyGrid grid;
  grid.frequencies = std::move(frequencies);
  return grid;
}

FrequencyGrid frequency_grid(Index bandwidth) {
  if (bandwidth < 1) throw ArgumentError("frequency_grid: bandwidth must be >= 1");
  FrequencyGrid grid = FrequencyGrid::fractions_of_pi(bandwidth, bandwidth);
  grid.bandwidth = bandwidth;
  return grid;
}

KernelFamily parse_kernel(std::string_view name) {
  if (name == "bartlett") return KernelFamily::bartlett;
  if (name == "parzen") return KernelFamily::parzen;
  throw ArgumentError("unknown kernel '" + std::string(name) + "'");
}

std::string_view to_string(KernelFamily family) {
  return family == KernelFamily::bartlett ? "bartlett" : "parzen";
}

double kernel_weight(const KernelSpec& spec, double u) {
  const double a = std::abs(u);
  if (a > 1.0) return 0.0;
  switch (spec.family) {
    case KernelFamily::bartlett:
      return 1.0 - a;
    case KernelFamily::parzen:
      if (a <= 0.5) return 1.0 - 6.0 * a * a + 6.0 * a * a * a;
      return 2.0 * (1.0 - a) * (1.0 - a) * (1.0 - a);
  }
  return 0.0;
}

namespace {

RMatrix centered(const TimeSeriesPanel& panel, bool demean) {
  RMatrix x = panel.values();
  if (demean) x.colwise() -= x.rowwise().mean();
  return x;
}

RMatrix autocov_of(const RMatrix& x, Index lag) {
  const Index t = x.cols();
  const Index k = std::abs(lag);
  RMatrix g = x.leftCols(t - k) * x.rightCols(t - k).transpose() / static_cast<double>(t);
  if (lag < 0) g.transposeInPlace();
  return g;
}

}  // namespace

RMatrix sample_autocov(const TimeSeriesPanel& panel, Index lag, bool demean) {
  if (std::abs(lag) >= panel.length()) {
    throw ArgumentError("sample_autocov: |k| = " + std::to_string(std::abs(lag)) +
                        " must be below T = " + std::to_string(panel.length()));
  }
  return autocov_of(centered(panel, demean), lag);
}

Index default_bandwidth(Index sample_size) {
  if (sample_size < 1) throw ArgumentError("default_bandwidth: sample size must be >= 1");
  auto m = static_cast<Index>(std::floor(std::sqrt(static_cast<double>(sample_size))));
  while ((m + 1) * (m + 1) <= sample_size) ++m;
  while (m * m > sample_size) --m;
  return m;
}

std::vector<HermitianMatrix> smoothed_periodogram(const TimeSeriesPanel& panel,
                                                  const KernelSpec& spec, Index bandwidth,
                                                  bool demean) {
  if (bandwidth < 1) throw ArgumentError("smoothed_periodogram: bandwidth must be >= 1");
  return smoothed_periodogram(panel, spec, bandwidth, frequency_grid(bandwidth), demean, 1);
}

std::vector<HermitianMatrix> smoothed_periodogram(const TimeSeriesPanel& panel,
                                                  const KernelSpec& spec, Index bandwidth,
                                                  const FrequencyGrid& grid, bool demean,
                                                  unsigned threads) {
  const Index t = panel.length();
  if (bandwidth < 1) throw ArgumentError("smoothed_periodogram: bandwidth must be >= 1");
  if (bandwidth >= t) {
    throw ArgumentError("smoothed_periodogram: bandwidth " + std::to_string(bandwidth) +
                        " must be below T = " + std::to_string(t));
  }

  // Lags beyond the kernel support contribute nothing.
  const RMatrix x = centered(panel, demean);
  std::vector<Index> lags;
  std::vector<RMatrix> gammas;
  std::vector<double> weights;
  for (Index k = 0; k <= bandwidth && k < t; ++k) {
    const double w = kernel_weight(spec, static_cast<double>(k) / static_cast<double>(bandwidth));
    if (k > 0 && w == 0.0) continue;
    lags.push_back(k);
    gammas.push_back(autocov_of(x, k));
    weights.push_back(w);
  }

  const double norm = 1.0 / (2.0 * std::numbers::pi);
  std::vector<HermitianMatrix> out(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t h) {
    const double theta = grid.frequencies[h];
    CMatrix acc = (weights[0] * gammas[0]).cast<Complex>();
    for (std::size_t j = 1; j < gammas.size(); ++j) {
      const double k = static_cast<double>(lags[j]);
      // e^{-i theta k} Gamma(k) + e^{i theta k} Gamma(k)'
      const Complex phase = std::polar(1.0, -theta * k);
      acc += weights[j] * (phase * gammas[j].cast<Complex>() +
                           std::conj(phase) * gammas[j].transpose().cast<Complex>());
    }
    out[h] = hermitize(CMatrix(norm * acc));
  });
  return out;
}

}  // namespace unalse
