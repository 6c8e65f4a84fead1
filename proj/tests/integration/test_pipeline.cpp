#include <gtest/gtest.h>

#include "test_support.hpp"
#include "unalse/errors.hpp"
#include "unalse/pipeline.hpp"
#include "unalse/simulate.hpp"

namespace unalse {
namespace {

SimulationTruth small_truth(std::uint64_t seed) {
  SimulationConfig sim = desk_scale_preset();
  sim.p = 12;
  sim.T = 300;
  sim.r = 1;
  sim.c = 1.0;
  sim.seed = seed;
  sim.grid = FrequencyGrid::fractions_of_pi(6, 3);
  return simulate(sim);
}

PipelineConfig small_config() {
  PipelineConfig pc;
  pc.grid = FrequencyGrid::fractions_of_pi(6, 3);
  pc.thresholds.n_thr = 4;
  pc.thresholds.max_outer = 2;
  return pc;
}

TEST(Pipeline, CellsMatchPeriodogramAndGrid) {
  const SimulationTruth truth = small_truth(1);
  const PipelineConfig pc = small_config();
  const PipelineResult r = estimate_spectrum(truth.panel, pc);
  EXPECT_EQ(r.p, 12);
  EXPECT_EQ(r.T, 300);
  EXPECT_EQ(r.bandwidth, 17);
  ASSERT_EQ(r.cells.size(), 4u);
  const auto st = smoothed_periodogram(truth.panel, pc.kernel, 17, *pc.grid);
  for (std::size_t h = 0; h < r.cells.size(); ++h) {
    const FrequencyEstimate& c = r.cells[h];
    EXPECT_EQ(c.theta, pc.grid->frequencies[h]);
    EXPECT_EQ(c.sigma_tilde, st[h]);
    EXPECT_EQ(c.estimate.rank, c.solution.rank);
    EXPECT_EQ(c.estimate.psi_used, c.solution.psi_effective);
    EXPECT_TRUE(c.mc.has_value());
  }
}

TEST(Pipeline, ManualThresholdsMatchDirectSolveAndUnshrink) {
  const SimulationTruth truth = small_truth(2);
  PipelineConfig pc = small_config();
  pc.selection = SelectionMode::manual;
  pc.solver.psi = 0.3;
  pc.solver.rho = 0.05;
  const PipelineResult r = estimate_spectrum(truth.panel, pc);
  const auto st = smoothed_periodogram(truth.panel, pc.kernel, r.bandwidth, *pc.grid);
  for (std::size_t h = 0; h < st.size(); ++h) {
    const AlseSolution direct = alse_solve(st[h], pc.solver);
    const UnalseEstimate u = unshrink(direct, direct.psi_effective, pc.diagonal_rule);
    const FrequencyEstimate& c = r.cells[h];
    EXPECT_EQ(c.psi, 0.3);
    EXPECT_EQ(c.rho, 0.05);
    EXPECT_FALSE(c.mc.has_value());
    EXPECT_EQ(c.solution.L_hat, direct.L_hat);
    EXPECT_EQ(c.solution.S_hat, direct.S_hat);
    EXPECT_EQ(c.estimate.L_u, u.L_u);
    EXPECT_EQ(c.estimate.S_u, u.S_u);
  }
}

TEST(Pipeline, ThreadCountDoesNotChangeResults) {
  const SimulationTruth truth = small_truth(3);
  PipelineConfig pc = small_config();
  const PipelineResult a = estimate_spectrum(truth.panel, pc);
  pc.threads = 3;
  const PipelineResult b = estimate_spectrum(truth.panel, pc);
  for (std::size_t h = 0; h < a.cells.size(); ++h) {
    EXPECT_EQ(a.cells[h].estimate.sigma_u, b.cells[h].estimate.sigma_u);
    EXPECT_EQ(a.cells[h].psi, b.cells[h].psi);
    EXPECT_EQ(a.cells[h].rho, b.cells[h].rho);
  }
}

TEST(Pipeline, InversesOnlyForPositiveDefiniteParts) {
  const SimulationTruth truth = small_truth(4);
  PipelineConfig pc = small_config();
  pc.with_inverse = true;
  const PipelineResult r = estimate_spectrum(truth.panel, pc);
  for (const FrequencyEstimate& c : r.cells) {
    EXPECT_EQ(c.S_inverse.has_value(), c.estimate.S_positive_definite);
    EXPECT_EQ(c.sigma_inverse.has_value(), c.estimate.sigma_positive_definite);
    if (c.sigma_inverse) {
      const CMatrix prod = c.estimate.sigma_u.matrix() * c.sigma_inverse->matrix();
      EXPECT_LT(testing::max_abs_diff(prod, CMatrix::Identity(12, 12)), 1e-8);
    }
  }
}

TEST(Pipeline, BundleRecordsSelection) {
  const SimulationTruth truth = small_truth(5);
  const PipelineConfig pc = small_config();
  const PipelineResult r = estimate_spectrum(truth.panel, pc);
  const EstimateBundle b = to_bundle(r, pc, 5, "memory");
  EXPECT_EQ(b.manifest.p, 12);
  EXPECT_EQ(b.manifest.bandwidth, 17);
  EXPECT_EQ(b.manifest.kernel, "bartlett");
  EXPECT_EQ(b.manifest.selection, "auto");
  EXPECT_EQ(b.manifest.seed, 5u);
  ASSERT_EQ(b.manifest.frequencies.size(), 4u);
  EXPECT_TRUE(b.manifest.has_sigma_tilde);
  for (std::size_t h = 0; h < 4; ++h) {
    const FrequencyRecord& f = b.manifest.frequencies[h];
    EXPECT_EQ(f.rank, r.cells[h].estimate.rank);
    EXPECT_EQ(f.psi_effective, r.cells[h].solution.psi_effective);
    EXPECT_EQ(b.sigma[h], r.cells[h].estimate.sigma_u);
  }
}

TEST(Pipeline, RejectsManualModeWithoutThresholds) {
  const SimulationTruth truth = small_truth(6);
  PipelineConfig pc = small_config();
  pc.selection = SelectionMode::manual;
  pc.solver.psi = 0.0;
  EXPECT_THROW(estimate_spectrum(truth.panel, pc), ArgumentError);
}

}  // namespace
}  // namespace unalse
