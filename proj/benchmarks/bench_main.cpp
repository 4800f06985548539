#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "concavelr/cone_qp.hpp"
#include "concavelr/estimators.hpp"
#include "concavelr/limit_sim.hpp"
#include "concavelr/lrt.hpp"

using namespace concavelr;

namespace {

Design noisy_quadratic(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
    y[i] = -x[i] * x[i] + g(rng);
  }
  return Design(std::move(x), std::move(y));
}

void BM_Project(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Design d = noisy_quadratic(n, 1);
  const ConeProblem p = alse_problem(d);
  for (auto _ : state) benchmark::DoNotOptimize(project(p));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Project)->RangeMultiplier(4)->Range(64, 4096)->Complexity();

void BM_FitNlse(benchmark::State& state) {
  const Design d = noisy_quadratic(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(fit_nlse(d, 0.01, 0.0));
}
BENCHMARK(BM_FitNlse)->Arg(100)->Arg(1000);

void BM_LrStatistic(benchmark::State& state) {
  const Design d = noisy_quadratic(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(lr_statistic(d, 0.0, 0.0));
}
BENCHMARK(BM_LrStatistic)->Arg(100)->Arg(1000);

void BM_DeeDraw(benchmark::State& state) {
  const double h = 1.0 / static_cast<double>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    const auto path = simulate_path(4.0, h, 1.0, 1.0, ++seed);
    benchmark::DoNotOptimize(dee_draw(path, 4.0));
  }
}
BENCHMARK(BM_DeeDraw)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
