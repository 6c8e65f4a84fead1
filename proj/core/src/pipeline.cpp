#include "unalse/pipeline.hpp"

#include <algorithm>
#include <utility>

#include "unalse/errors.hpp"
#include "unalse/metrics.hpp"
#include "unalse/parallel.hpp"

namespace unalse {

std::string_view to_string(SelectionMode mode) {
  switch (mode) {
    case SelectionMode::manual: return "manual";
    case SelectionMode::grid: return "grid";
    case SelectionMode::auto_tune: return "auto";
  }
  return "auto";
}

FrequencyEstimate estimate_frequency(const HermitianMatrix& sigma_tilde, double theta,
                                     Index sample_size, const PipelineConfig& config,
                                     unsigned threads) {
  FrequencyEstimate out;
  out.theta = theta;
  out.sigma_tilde = sigma_tilde;

  switch (config.selection) {
    case SelectionMode::manual:
      out.solution = alse_solve(sigma_tilde, config.solver);
      out.psi = config.solver.psi;
      out.rho = config.solver.rho;
      break;
    case SelectionMode::grid:
    case SelectionMode::auto_tune: {
      SelectionResult sel =
          config.selection == SelectionMode::grid
              ? select_thresholds(sigma_tilde, sample_size, config.thresholds, config.solver, threads)
              : auto_tune(sigma_tilde, sample_size, config.thresholds, config.solver, threads);
      out.solution = std::move(sel.solution);
      out.psi = sel.psi_star;
      out.rho = sel.rho_star;
      out.mc = sel.mc_value;
      out.boundary = sel.boundary_flag;
      break;
    }
  }

  out.estimate = unshrink(out.solution, out.solution.psi_effective, config.diagonal_rule);
  if (config.with_inverse) {
    if (out.estimate.S_positive_definite) out.S_inverse = inverse_if_pd(out.estimate.S_u, 0.0);
    if (out.estimate.sigma_positive_definite) out.sigma_inverse = inverse_if_pd(out.estimate.sigma_u, 0.0);
  }
  return out;
}

PipelineResult estimate_spectrum(const TimeSeriesPanel& panel, const PipelineConfig& config) {
  config.thresholds.validate();
  if (config.selection == SelectionMode::manual) config.solver.validate();

  PipelineResult result;
  result.p = panel.series();
  result.T = panel.length();
  result.bandwidth = config.bandwidth.value_or(default_bandwidth(result.T));
  result.grid = config.grid.value_or(frequency_grid(result.bandwidth));

  const unsigned threads = std::max(1u, config.threads);
  const std::vector<HermitianMatrix> sigma_tilde = smoothed_periodogram(
      panel, config.kernel, result.bandwidth, result.grid, config.demean, threads);

  const std::size_t n = sigma_tilde.size();
  const unsigned inner = std::max(1u, threads / static_cast<unsigned>(std::max<std::size_t>(n, 1)));
  std::vector<std::optional<FrequencyEstimate>> cells(n);
  parallel_for(n, threads, [&](std::size_t h) {
    cells[h] = estimate_frequency(sigma_tilde[h], result.grid.frequencies[h], result.T, config, inner);
  });
  result.cells.reserve(n);
  for (auto& c : cells) result.cells.push_back(std::move(*c));
  return result;
}

EstimateBundle to_bundle(const PipelineResult& result, const PipelineConfig& config,
                         std::optional<std::uint64_t> seed, std::string source) {
  EstimateBundle b;
  EstimateManifest& m = b.manifest;
  m.tool_version = std::string(kVersion);
  m.p = result.p;
  m.T = result.T;
  m.bandwidth = result.bandwidth;
  m.kernel = std::string(to_string(config.kernel.family));
  m.demean = config.demean;
  m.selection = std::string(to_string(config.selection));
  m.diagonal_rule = std::string(to_string(config.diagonal_rule));
  m.seed = seed;
  m.source = std::move(source);
  m.has_sigma_tilde = config.keep_sigma_tilde;
  m.with_inverse = config.with_inverse;

  for (const FrequencyEstimate& c : result.cells) {
    FrequencyRecord r;
    r.theta = c.theta;
    r.rank = c.estimate.rank;
    r.psi = c.psi;
    r.rho = c.rho;
    r.psi_effective = c.solution.psi_effective;
    try {
      r.beta_hat = beta_hat(c.estimate.L_u, c.estimate.sigma_u);
    } catch (const DegenerateInput&) {
    }
    try {
      r.zeta_hat = zeta_hat(c.estimate.S_u, c.estimate.sigma_u);
    } catch (const DegenerateInput&) {
    }
    r.nonzeros = c.solution.nonzero_count;
    r.converged = c.solution.converged;
    r.iterations = c.solution.iterations;
    r.mc = c.mc;
    r.boundary = c.boundary;
    r.S_positive_definite = c.estimate.S_positive_definite;
    r.sigma_positive_definite = c.estimate.sigma_positive_definite;
    r.has_S_inverse = c.S_inverse.has_value();
    r.has_sigma_inverse = c.sigma_inverse.has_value();
    m.frequencies.push_back(r);

    b.L.push_back(c.estimate.L_u);
    b.S.push_back(c.estimate.S_u);
    b.sigma.push_back(c.estimate.sigma_u);
    if (config.keep_sigma_tilde) b.sigma_tilde.push_back(c.sigma_tilde);
    if (config.with_inverse) {
      b.S_inverse.push_back(c.S_inverse);
      b.sigma_inverse.push_back(c.sigma_inverse);
    }
  }
  return b;
}

}  // namespace unalse
