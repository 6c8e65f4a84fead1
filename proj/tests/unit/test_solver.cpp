#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <random>

#include "test_support.hpp"
#include "unalse/errors.hpp"
#include "unalse/periodogram.hpp"
#include "unalse/selection.hpp"
#include "unalse/simulate.hpp"
#include "unalse/solver.hpp"

namespace unalse {
namespace {

using testing::l1_prox_reference;
using testing::max_abs_diff;
using testing::psd_trace_prox_reference;
using testing::random_hermitian;
using testing::random_psd;

TEST(Svt, DiagonalExample) {
  Index rank = -1;
  const HermitianMatrix out = svt(HermitianMatrix::diagonal(RVector{{3.0, 1.0}}), 2.0, rank);
  EXPECT_LT(max_abs_diff(out.matrix(), HermitianMatrix::diagonal(RVector{{1.0, 0.0}}).matrix()), 1e-14);
  EXPECT_EQ(rank, 1);
}

TEST(Svt, ZeroThresholdKeepsPsdInput) {
  const HermitianMatrix m = random_psd(4, 2);
  EXPECT_LT(max_abs_diff(svt(m, 0.0).matrix(), m.matrix()), 1e-12);
}

TEST(Svt, NegativeEigenvaluesVanish) {
  const HermitianMatrix out = svt(HermitianMatrix::diagonal(RVector{{2.0, -3.0}}), 0.5);
  EXPECT_NEAR(out(0, 0).real(), 1.5, 1e-14);
  EXPECT_NEAR(out(1, 1).real(), 0.0, 1e-14);
}

TEST(Svt, RejectsNegativeThreshold) {
  EXPECT_THROW(svt(HermitianMatrix::identity(2), -0.1), ArgumentError);
}

TEST(Svt, MatchesProjectedGradientReference) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const HermitianMatrix m = random_hermitian(3, seed);
    const CMatrix want = psd_trace_prox_reference(m.matrix(), 0.5);
    EXPECT_LT(max_abs_diff(svt(m, 0.5).matrix(), want), 1e-6) << "seed " << seed;
  }
}

TEST(SoftThreshold, ComplexEntry) {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 1) = Complex(3, 4);
  m(1, 0) = Complex(3, -4);
  const HermitianMatrix out = soft_threshold(HermitianMatrix(m), 2.0);
  EXPECT_NEAR(out(0, 1).real(), 1.8, 1e-14);
  EXPECT_NEAR(out(0, 1).imag(), 2.4, 1e-14);
  EXPECT_EQ(out(1, 0), std::conj(out(0, 1)));
}

TEST(SoftThreshold, LargeThresholdGivesZero) {
  const HermitianMatrix m = random_hermitian(4, 8);
  const double top = m.matrix().cwiseAbs().maxCoeff();
  EXPECT_EQ(soft_threshold(m, top), HermitianMatrix::zeros(4));
}

TEST(SoftThreshold, EntrywiseModulusAndPhase) {
  const HermitianMatrix m = random_hermitian(4, 5);
  const HermitianMatrix out = soft_threshold(m, 0.3);
  for (Index i = 0; i < 4; ++i) {
    for (Index j = 0; j < 4; ++j) {
      const double in_mod = std::abs(m(i, j));
      EXPECT_NEAR(std::abs(out(i, j)), std::max(in_mod - 0.3, 0.0), 1e-14);
      if (in_mod > 0.3) EXPECT_NEAR(std::arg(out(i, j)), std::arg(m(i, j)), 1e-12);
    }
  }
}

TEST(SoftThreshold, RejectsNegativeThreshold) {
  EXPECT_THROW(soft_threshold(HermitianMatrix::identity(2), -1.0), ArgumentError);
}

TEST(SoftThreshold, MatchesNelderMeadReference) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const HermitianMatrix m = random_hermitian(3, 100 + seed);
    const CMatrix want = l1_prox_reference(m.matrix(), 0.4);
    EXPECT_LT(max_abs_diff(soft_threshold(m, 0.4).matrix(), want), 1e-6) << "seed " << seed;
  }
}

TEST(Objective, Examples) {
  const HermitianMatrix sigma = random_psd(3, 1);
  const HermitianMatrix zero = HermitianMatrix::zeros(3);
  EXPECT_NEAR(objective(sigma, zero, zero, 1.0, 1.0), 0.5 * sigma.matrix().squaredNorm(), 1e-12);
  const HermitianMatrix l = random_psd(3, 2);
  EXPECT_NEAR(objective(sigma, l, sigma - l, 0.0, 0.0), 0.0, 1e-24);
  EXPECT_THROW(objective(sigma, HermitianMatrix::zeros(2), zero, 1.0, 1.0), DimensionError);
}

TEST(Objective, TermByTerm) {
  const HermitianMatrix sigma = random_hermitian(4, 3);
  const HermitianMatrix l = random_psd(4, 4);
  const HermitianMatrix s = random_hermitian(4, 5);
  double fit = 0.0, tr = 0.0, l1 = 0.0;
  for (Index i = 0; i < 4; ++i) {
    tr += l(i, i).real();
    for (Index j = 0; j < 4; ++j) {
      fit += std::norm(sigma(i, j) - l(i, j) - s(i, j));
      l1 += std::abs(s(i, j));
    }
  }
  EXPECT_NEAR(objective(sigma, l, s, 0.7, 0.2), 0.5 * fit + 0.7 * tr + 0.2 * l1, 1e-12);
}

TEST(Gini, Examples) {
  EXPECT_NEAR(gini(RVector{{1.0, 1.0, 1.0}}), 0.0, 1e-15);
  EXPECT_NEAR(gini(RVector{{1.0, 0.0, 0.0}}), 2.0 / 3.0, 1e-15);
  EXPECT_THROW(gini(RVector{{0.0, 0.0}}), DegenerateInput);
  EXPECT_THROW(gini(RVector{{1.0, -1.0}}), ArgumentError);
}

TEST(Gini, MatchesDoubleSumAndRankFormula) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int rep = 0; rep < 10; ++rep) {
    RVector v(20);
    for (Index i = 0; i < 20; ++i) v(i) = u(rng);
    double pair_sum = 0.0;
    for (Index i = 0; i < 20; ++i)
      for (Index j = 0; j < 20; ++j) pair_sum += std::abs(v(i) - v(j));
    const double by_pairs = pair_sum / (2.0 * 20.0 * v.sum());

    RVector sorted = v;
    std::sort(sorted.begin(), sorted.end());
    double weighted = 0.0;
    for (Index i = 0; i < 20; ++i) weighted += static_cast<double>(i + 1) * sorted(i);
    const double by_rank = 2.0 * weighted / (20.0 * v.sum()) - 21.0 / 20.0;

    EXPECT_NEAR(gini(v), by_pairs, 1e-12);
    EXPECT_NEAR(gini(v), by_rank, 1e-12);
    EXPECT_GE(gini(v), 0.0);
    EXPECT_LE(gini(v), 1.0);
  }
}

TEST(AlseSolve, LargeThresholdsAnnihilateQuickly) {
  SolverConfig cfg;
  cfg.psi = 10.0;
  cfg.rho = 10.0;
  const AlseSolution sol = alse_solve(HermitianMatrix::identity(2), cfg);
  EXPECT_EQ(sol.L_hat, HermitianMatrix::zeros(2));
  EXPECT_EQ(sol.S_hat, HermitianMatrix::zeros(2));
  EXPECT_TRUE(sol.converged);
  EXPECT_LE(sol.iterations, 3);
  EXPECT_EQ(sol.rank, 0);
}

TEST(AlseSolve, TinyPsiHugeRhoRecoversLowRankPart) {
  SolverConfig cfg;
  cfg.psi = 1e-9;
  cfg.rho = 1e6;
  cfg.gini_adaptation = false;
  const HermitianMatrix id = HermitianMatrix::identity(2);
  const AlseSolution sol = alse_solve(id, cfg);
  EXPECT_TRUE(sol.converged);
  EXPECT_EQ(sol.S_hat, HermitianMatrix::zeros(2));
  EXPECT_LT(max_abs_diff(sol.L_hat.matrix(), id.matrix()), 0.05);
  const double at_identity = objective(id, id, HermitianMatrix::zeros(2), cfg.psi, cfg.rho);
  EXPECT_LE(sol.objective_value, at_identity + 1e-3);
}

TEST(AlseSolve, OutputInvariants) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const HermitianMatrix sigma = random_psd(6, seed, 0.2);
    SolverConfig cfg;
    cfg.psi = 0.2;
    cfg.rho = 0.05;
    const AlseSolution sol = alse_solve(sigma, cfg);
    EXPECT_EQ(sol.sigma_hat, sol.L_hat + sol.S_hat);
    EXPECT_GE(min_eigenvalue(sol.L_hat), -1e-10);
    EXPECT_EQ(sol.rank, numerical_rank(sol.L_hat, 1e-10));
    EXPECT_EQ(sol.nonzero_count, count_offdiag_nonzeros(sol.S_hat));
    EXPECT_LE(sol.iterations, cfg.max_iterations);
  }
}

TEST(AlseSolve, ObjectiveEndpointDecrease) {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const HermitianMatrix sigma = random_psd(5, 1000 + seed);
    for (bool adapt : {false, true}) {
      SolverConfig cfg;
      cfg.psi = 0.3;
      cfg.rho = 0.1;
      cfg.gini_adaptation = adapt;
      const AlseSolution sol = alse_solve(sigma, cfg);
      const HermitianMatrix half = HermitianMatrix::diagonal(0.5 * sigma.diag());
      // Compare at the threshold the final iterate was produced with.
      const double start = objective(sigma, half, half, sol.psi_effective, cfg.rho);
      const double end = objective(sigma, sol.L_hat, sol.S_hat, sol.psi_effective, cfg.rho);
      EXPECT_LE(end, start + 1e-12) << "seed " << seed << " adapt " << adapt;
    }
  }
}

TEST(AlseSolve, RestartAtFixedPointStopsImmediately) {
  const HermitianMatrix sigma = random_psd(5, 77, 0.1);
  SolverConfig tight;
  tight.psi = 0.3;
  tight.rho = 0.05;
  tight.gini_adaptation = false;
  tight.varsigma = 1e-12;
  tight.max_iterations = 20000;
  const AlseSolution exact = alse_solve(sigma, tight);
  ASSERT_TRUE(exact.converged);

  SolverConfig loose = tight;
  loose.varsigma = 0.01;
  const AlseSolution again = alse_solve(sigma, loose, SolverStart{exact.L_hat, exact.S_hat});
  EXPECT_TRUE(again.converged);
  EXPECT_EQ(again.iterations, 1);
}

TEST(AlseSolve, IterationCap) {
  SolverConfig cfg;
  cfg.psi = 0.1;
  cfg.rho = 0.01;
  cfg.varsigma = 1e-300;
  cfg.max_iterations = 3;
  const AlseSolution sol = alse_solve(random_psd(4, 9), cfg);
  EXPECT_EQ(sol.iterations, 3);
  EXPECT_FALSE(sol.converged);
}

TEST(AlseSolve, RejectsBadInput) {
  SolverConfig cfg;
  EXPECT_THROW(alse_solve(HermitianMatrix::diagonal(RVector{{1.0, -1.0}}), cfg), ArgumentError);
  cfg.rho = 0.0;
  EXPECT_THROW(alse_solve(HermitianMatrix::identity(2), cfg), ArgumentError);
  cfg.rho = 1.0;
  cfg.max_iterations = 0;
  EXPECT_THROW(alse_solve(HermitianMatrix::identity(2), cfg), ArgumentError);
  EXPECT_THROW(alse_solve(HermitianMatrix::identity(2), SolverConfig{},
                          SolverStart{HermitianMatrix::zeros(3), HermitianMatrix::zeros(3)}),
               DimensionError);
}

TEST(AlseSolve, RankOneTruthWithSelectedThresholds) {
  SimulationConfig sim = desk_scale_preset();
  sim.p = 10;
  sim.T = 500;
  sim.r = 1;
  sim.c = 1.0;
  sim.seed = 31;
  const SimulationTruth truth = simulate(sim);
  const auto st = smoothed_periodogram(truth.panel, {}, default_bandwidth(sim.T), sim.grid);
  const SelectionResult sel = select_thresholds(st[0], sim.T, ThresholdConfig{}, SolverConfig{});
  SolverConfig cfg;
  cfg.psi = sel.psi_star;
  cfg.rho = sel.rho_star;
  EXPECT_EQ(alse_solve(st[0], cfg).rank, 1);
}

TEST(AlseSolve, RankAlongIncreasingPsiIsLogged) {
  int violations = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const HermitianMatrix sigma = random_psd(6, 500 + seed);
    Index last = std::numeric_limits<Index>::max();
    for (double psi = 0.05; psi <= 1.0; psi += 0.05) {
      SolverConfig cfg;
      cfg.psi = psi;
      cfg.rho = 0.05;
      const Index r = alse_solve(sigma, cfg).rank;
      if (r > last) ++violations;
      last = r;
    }
  }
  std::cout << "rank increases along psi sweeps: " << violations << "\n";
  RecordProperty("rank_monotonicity_violations", violations);
}

}  // namespace
}  // namespace unalse
