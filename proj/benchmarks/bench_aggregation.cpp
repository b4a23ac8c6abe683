#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "fcmfed/aggregation.hpp"

using namespace fcmfed;

static void BM_Aggregate(benchmark::State& state) {
  const auto agents = static_cast<std::size_t>(state.range(0));
  const std::size_t n = 32;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<ContributionBundle> bundles;
  for (std::size_t k = 0; k < agents; ++k) {
    Matrix w(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) w(i, j) = u(rng);
    bundles.push_back({std::move(w), 0.8 + 0.01 * static_cast<double>(k), 0.7, k, 100});
  }
  for (auto _ : state) benchmark::DoNotOptimize(aggregate(bundles, WeightScheme::AccuracyBased));
}
BENCHMARK(BM_Aggregate)->Arg(2)->Arg(5)->Arg(20);

BENCHMARK_MAIN();
