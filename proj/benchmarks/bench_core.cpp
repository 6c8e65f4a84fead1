#include <benchmark/benchmark.h>

#include <random>

#include "unalse/hermitian.hpp"
#include "unalse/periodogram.hpp"
#include "unalse/selection.hpp"
#include "unalse/simulate.hpp"
#include "unalse/solver.hpp"

namespace {

using namespace unalse;

HermitianMatrix random_hermitian(Index p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  CMatrix m(p, p);
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < p; ++i) m(i, j) = Complex(z(rng), z(rng));
  return hermitize(m);
}

HermitianMatrix desk_periodogram(Index p) {
  SimulationConfig cfg = desk_scale_preset();
  cfg.p = p;
  cfg.seed = 3;
  const SimulationTruth truth = simulate(cfg);
  return smoothed_periodogram(truth.panel, {}, default_bandwidth(cfg.T), cfg.grid)[1];
}

void BM_Eigh(benchmark::State& state) {
  const HermitianMatrix m = random_hermitian(state.range(0), 1);
  for (auto _ : state) benchmark::DoNotOptimize(eigh(m));
}
BENCHMARK(BM_Eigh)->Arg(10)->Arg(50)->Arg(100);

void BM_SmoothedPeriodogram(benchmark::State& state) {
  const Index p = state.range(0);
  const Index T = state.range(1);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z;
  RMatrix x(p, T);
  for (Index t = 0; t < T; ++t)
    for (Index i = 0; i < p; ++i) x(i, t) = z(rng);
  const TimeSeriesPanel panel(x);
  const FrequencyGrid grid = FrequencyGrid::fractions_of_pi(12, 5);
  for (auto _ : state) benchmark::DoNotOptimize(smoothed_periodogram(panel, {}, default_bandwidth(T), grid));
}
BENCHMARK(BM_SmoothedPeriodogram)->Args({50, 500})->Args({50, 3200})->Unit(benchmark::kMillisecond);

void BM_AlseSolve(benchmark::State& state) {
  const HermitianMatrix sigma = desk_periodogram(state.range(0));
  SolverConfig cfg;
  cfg.psi = 0.1;
  cfg.rho = 0.02;
  for (auto _ : state) benchmark::DoNotOptimize(alse_solve(sigma, cfg));
}
BENCHMARK(BM_AlseSolve)->Arg(20)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_SelectThresholds(benchmark::State& state) {
  const HermitianMatrix sigma = desk_periodogram(50);
  for (auto _ : state) {
    benchmark::DoNotOptimize(select_thresholds(sigma, 500, ThresholdConfig{}, SolverConfig{}));
  }
}
BENCHMARK(BM_SelectThresholds)->Unit(benchmark::kMillisecond)->Iterations(2);

}  // namespace

BENCHMARK_MAIN();
