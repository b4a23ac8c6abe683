#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "fcmfed/pso.hpp"

using namespace fcmfed;

// Threshold problem on 30 features; feature 0 decides the class.
static void BM_Train(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const std::size_t cols = 30;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix x(rows, cols);
  std::vector<int> y(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) x(r, c) = u(rng);
    y[r] = x(r, 0) > 0.5;
  }
  const ModelShape shape{cols, 2, ActivationKind::HyperbolicTangent, 2.0};
  PsoConfig cfg;
  cfg.seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train(x, y, shape, cfg).fitness);
}
BENCHMARK(BM_Train)->Arg(90)->Arg(455)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
