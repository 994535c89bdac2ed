#include <benchmark/benchmark.h>

#include <vector>

#include "deferkit/bayes.hpp"
#include "deferkit/random.hpp"
#include "deferkit/selection.hpp"

using namespace deferkit;

namespace {

void BM_TopK(benchmark::State& state) {
  const auto m = static_cast<int>(state.range(0));
  const int k = std::max(1, m / 4);
  Rng rng(11);
  std::vector<double> scores(static_cast<std::size_t>(m));
  for (double& s : scores) s = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(top_k(scores, k));
}
BENCHMARK(BM_TopK)->RangeMultiplier(4)->Range(4, 1024);

void BM_FullRanking(benchmark::State& state) {
  const auto m = static_cast<int>(state.range(0));
  Rng rng(12);
  std::vector<double> scores(static_cast<std::size_t>(m));
  for (double& s : scores) s = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(full_ranking(scores));
}
BENCHMARK(BM_FullRanking)->RangeMultiplier(4)->Range(4, 1024);

void BM_GammaInverse(benchmark::State& state) {
  const CompSumParam u(static_cast<double>(state.range(0)));
  double t = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(gamma_inverse(u, t, 8));
    t = t < 0.5 ? t + 0.01 : 0.1;
  }
}
BENCHMARK(BM_GammaInverse)->Arg(0)->Arg(1)->Arg(2);

}  // namespace
