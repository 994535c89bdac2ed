#include <benchmark/benchmark.h>

#include <vector>

#include "deferkit/losses.hpp"
#include "deferkit/random.hpp"
#include "deferkit/selection.hpp"

using namespace deferkit;

namespace {

std::vector<double> normals(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(static_cast<std::size_t>(n));
  for (double& x : v) x = rng.normal();
  return v;
}

std::vector<double> uniforms(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(static_cast<std::size_t>(n));
  for (double& x : v) x = rng.uniform();
  return v;
}

void BM_DeferralSurrogate(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const auto scores = normals(m, 1);
  const auto costs = uniforms(m, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(deferral_surrogate(scores, costs, CompSumParam::logistic()));
  }
}
BENCHMARK(BM_DeferralSurrogate)->RangeMultiplier(2)->Range(2, 64);

void BM_DeferralSurrogateWithGradient(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const auto scores = normals(m, 1);
  const auto costs = uniforms(m, 2);
  std::vector<double> grad(static_cast<std::size_t>(m));
  for (auto _ : state) {
    benchmark::DoNotOptimize(deferral_surrogate(scores, costs, CompSumParam(0.5), grad));
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_DeferralSurrogateWithGradient)->RangeMultiplier(2)->Range(2, 64);

void BM_CardinalitySurrogate(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const auto policy = normals(m, 3);
  const auto card_scores = normals(m, 4);
  Rng rng(5);
  std::vector<Output> preds;
  for (int j = 0; j < m; ++j) preds.emplace_back(ClassId{1 + static_cast<int>(rng.below(4))});
  const auto betas = uniforms(m, 6);
  const ExampleView view{preds, policy, ClassId{1}};
  CardinalityLossConfig config;
  config.lambda = 1.0;
  const auto ranking = full_ranking(policy);
  std::vector<double> grad(static_cast<std::size_t>(m));
  for (auto _ : state) {
    benchmark::DoNotOptimize(cardinality_surrogate(ranking, card_scores, view, config, betas,
                                                   CompSumParam::logistic(), grad));
  }
}
BENCHMARK(BM_CardinalitySurrogate)->RangeMultiplier(2)->Range(2, 32);

}  // namespace
