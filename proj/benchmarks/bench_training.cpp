#include <benchmark/benchmark.h>

#include "deferkit/datasets.hpp"
#include "deferkit/training.hpp"

using namespace deferkit;

namespace {

struct Task {
  Dataset data;
  ExpertPool pool;
};

const Task& task() {
  static const Task t = [] {
    SyntheticSpec spec;
    spec.n_examples = 2000;
    spec.seed = 21;
    auto data = generate_synthetic(spec);
    ExpertPoolSpec pool_spec;
    pool_spec.seed = 22;
    auto pool = generate_experts(data, spec.n_classes, pool_spec);
    return Task{std::move(data), std::move(pool)};
  }();
  return t;
}

// One epoch over 2000 examples, |A| = 16.
void BM_PolicyEpoch(benchmark::State& state) {
  const auto& t = task();
  TrainConfig config;
  config.epochs = 1;
  const ModelShape shape{Architecture::Mlp, 1, static_cast<int>(state.range(0)), 1,
                         Activation::Tanh};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        train_policy(t.data, t.pool.set, t.pool.predictions, Penalty::ZeroOne, shape, config));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(t.data.size()));
}
BENCHMARK(BM_PolicyEpoch)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ScoreModelForward(benchmark::State& state) {
  const auto& t = task();
  const ModelShape shape{Architecture::Mlp, t.data.feature_dim, static_cast<int>(state.range(0)),
                         16, Activation::Tanh};
  const auto model = ScoreModel::initialized(shape, 1);
  std::vector<double> out(16);
  std::size_t i = 0;
  for (auto _ : state) {
    model.forward(t.data.x(i), out);
    benchmark::DoNotOptimize(out.data());
    i = (i + 1) % t.data.size();
  }
}
BENCHMARK(BM_ScoreModelForward)->Arg(16)->Arg(64)->Arg(256);

}  // namespace
