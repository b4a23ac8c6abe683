#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "fcmfed/fcm.hpp"

using namespace fcmfed;

namespace {

FcmModel random_model(std::size_t n_input, std::uint64_t seed) {
  const std::size_t n = n_input + 2;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix w(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) w(i, j) = u(rng);
  return FcmModel(n_input, 2, std::move(w), ActivationKind::HyperbolicTangent, 2.0);
}

} // namespace

static void BM_Classify(benchmark::State& state) {
  const auto n_input = static_cast<std::size_t>(state.range(0));
  const auto model = random_model(n_input, 7);
  std::vector<double> row(n_input, 0.4);
  for (auto _ : state) benchmark::DoNotOptimize(classify(model, row));
}
BENCHMARK(BM_Classify)->Arg(4)->Arg(30)->Arg(100);

static void BM_Step(benchmark::State& state) {
  const auto n_input = static_cast<std::size_t>(state.range(0));
  const auto model = random_model(n_input, 7);
  std::vector<double> row(n_input, 0.4);
  const auto s = initial_state(model, row);
  for (auto _ : state) benchmark::DoNotOptimize(step(model, s));
}
BENCHMARK(BM_Step)->Arg(30)->Arg(100);

BENCHMARK_MAIN();
