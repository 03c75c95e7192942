#include <benchmark/benchmark.h>

#include <random>

#include "logistory/stats.hpp"

using namespace logistory;

static void BM_KendallTauB(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> d(1, 50);
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = d(rng);
    y[i] = d(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(kendall_tau_b(x, y));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_KendallTauB)->RangeMultiplier(4)->Range(16, 16384)->Complexity(benchmark::oNLogN);

static void BM_AlphaOrdinal(benchmark::State& state) {
  const auto items = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> d(1, 5);
  RatingTable t;
  t.scale = {1, 2, 3, 4, 5};
  for (std::size_t i = 0; i < items; ++i) {
    std::vector<std::optional<double>> row;
    for (int r = 0; r < 5; ++r) row.push_back(static_cast<double>(d(rng)));
    t.cells.push_back(std::move(row));
  }
  for (auto _ : state) benchmark::DoNotOptimize(krippendorff_alpha_ordinal(t));
}
BENCHMARK(BM_AlphaOrdinal)->Arg(100)->Arg(1000)->Arg(10000);
