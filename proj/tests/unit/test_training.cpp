#include <gtest/gtest.h>

#include <cmath>

#include "deferkit/csv.hpp"
#include "deferkit/datasets.hpp"
#include "deferkit/error.hpp"
#include "deferkit/evaluation.hpp"
#include "deferkit/random.hpp"
#include "deferkit/training.hpp"

using namespace deferkit;

namespace {

ModelShape linear_shape() { return {Architecture::Linear, 0, 0, 0, Activation::Tanh}; }

// Two labels, target always class 1: label 1 is strictly cheaper everywhere.
struct Separable {
  Dataset data;
  EntitySet set = EntitySet::one_stage(2, std::vector<double>{});
  EntityPredictions preds{2};
};

Separable separable(int n, std::uint64_t seed) {
  Separable s;
  Rng rng(seed);
  s.data.feature_dim = 3;
  for (int i = 0; i < n; ++i) {
    s.data.ids.push_back(i);
    for (int f = 0; f < 3; ++f) s.data.features.push_back(rng.normal());
    s.data.targets.emplace_back(ClassId{1});
    s.preds.add(i, {ClassId{1}, ClassId{2}});
  }
  return s;
}

// Two-stage regression: the base predictor is free and the most accurate,
// experts charge positive fees.
struct Regression {
  Dataset data;
  EntitySet set = EntitySet::two_stage(std::vector<double>{0.02, 0.01, 0.03});
  EntityPredictions preds{4};
};

Regression regression(int n, std::uint64_t seed) {
  Regression r;
  Rng rng(seed);
  r.data.feature_dim = 2;
  for (int i = 0; i < n; ++i) {
    const double a = rng.normal();
    const double b = rng.normal();
    const double z = 0.5 * a - 0.3 * b;
    r.data.ids.push_back(i);
    r.data.features.insert(r.data.features.end(), {a, b});
    r.data.targets.emplace_back(z);
    std::vector<Output> row;
    for (int j = 0; j < 4; ++j) row.emplace_back(z + (j == 0 ? 0.05 : 0.3) * rng.normal());
    r.preds.add(i, row);
  }
  return r;
}

std::string log_without_timing(const TrainingLog& log) {
  std::string out = csv::format(log.initial_train) + "," + csv::format(log.initial_val) + ";";
  for (const auto& e : log.epochs) {
    out += std::to_string(e.epoch) + "," + csv::format(e.train_surrogate) + "," +
           csv::format(e.val_surrogate) + ";";
  }
  return out + std::to_string(log.best_epoch);
}

}  // namespace

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.epochs = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.validation_fraction = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.momentum = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(TrainPolicy, ZeroLearningRateKeepsInitialParameters) {
  const auto s = separable(200, 1);
  TrainConfig config;
  config.epochs = 3;
  config.learning_rate = 0.0;
  const auto result = train_policy(s.data, s.set, s.preds, Penalty::ZeroOne, linear_shape(), config);
  ModelShape shape = linear_shape();
  shape.input_dim = 3;
  shape.output_dim = 2;
  EXPECT_EQ(result.model.checksum(), ScoreModel::initialized(shape, derive_seed(0, 3)).checksum());
  for (const auto& e : result.log.epochs) EXPECT_EQ(e.val_surrogate, result.log.initial_val);
  EXPECT_EQ(result.log.best_epoch, 0);
}

TEST(TrainPolicy, LearnsTheCheaperEntity) {
  const auto train = separable(1000, 2);
  const auto test = separable(1000, 3);
  TrainConfig config;
  config.epochs = 20;
  config.learning_rate = 0.05;
  const auto result =
      train_policy(train.data, train.set, train.preds, Penalty::ZeroOne, linear_shape(), config);
  int hits = 0;
  for (std::size_t i = 0; i < test.data.size(); ++i) {
    const auto scores = result.model.forward(test.data.x(i));
    hits += top_k(scores, 1).ranked()[0] == 1 ? 1 : 0;
  }
  EXPECT_GE(hits, 990);
}

TEST(TrainPolicy, DeterministicLogs) {
  const auto s = separable(300, 4);
  for (bool shuffle : {false, true}) {
    TrainConfig config;
    config.epochs = 5;
    config.batch_size = 32;
    config.learning_rate = 0.05;
    config.seed = 9;
    config.shuffle = shuffle;
    const auto a = train_policy(s.data, s.set, s.preds, Penalty::ZeroOne, linear_shape(), config);
    const auto b = train_policy(s.data, s.set, s.preds, Penalty::ZeroOne, linear_shape(), config);
    EXPECT_EQ(log_without_timing(a.log), log_without_timing(b.log));
    EXPECT_EQ(a.model.checksum(), b.model.checksum());
  }
}

TEST(TrainPolicy, DivergenceRaisesNumericalError) {
  auto s = separable(200, 5);
  Rng rng(6);
  for (auto& t : s.data.targets) t = ClassId{1 + static_cast<int>(rng.below(2))};
  TrainConfig config;
  config.epochs = 5;
  config.learning_rate = 1e9;
  config.momentum = 0.0;
  EXPECT_THROW(train_policy(s.data, s.set, s.preds, Penalty::ZeroOne, linear_shape(), config),
               NumericalError);
}

TEST(TrainPolicy, DefaultConfigTrainingLossMostlyDecreases) {
  SyntheticSpec spec;
  spec.n_examples = 1000;
  spec.seed = 10;
  const auto data = generate_synthetic(spec);
  ExpertPoolSpec pool_spec;
  pool_spec.seed = 11;
  const auto pool = generate_experts(data, spec.n_classes, pool_spec);
  const ModelShape shape{Architecture::Mlp, 0, 32, 0, Activation::Tanh};
  const auto result =
      train_policy(data, pool.set, pool.predictions, Penalty::ZeroOne, shape, TrainConfig{});
  const auto& epochs = result.log.epochs;
  int decreasing = 0;
  for (std::size_t e = 1; e < epochs.size(); ++e) {
    decreasing += epochs[e].train_surrogate <= epochs[e - 1].train_surrogate ? 1 : 0;
  }
  EXPECT_GE(decreasing, static_cast<int>(std::ceil(0.9 * static_cast<double>(epochs.size() - 1))));
}

TEST(TrainCardinality, HugeLambdaPicksOneEntity) {
  const auto r = regression(600, 12);
  TrainConfig config;
  config.epochs = 15;
  config.learning_rate = 0.05;
  const auto policy =
      train_policy(r.data, r.set, r.preds, Penalty::SquaredError, linear_shape(), config).model;
  CardinalityLossConfig card;
  card.metric = DecisionRule::MinCost;
  card.lambda = 1e3;
  const auto before = policy.checksum();
  const auto result =
      train_cardinality(r.data, policy, r.set, r.preds, card, linear_shape(), config);
  EXPECT_EQ(policy.checksum(), before);
  int ones = 0;
  for (std::size_t i = 0; i < r.data.size(); ++i) {
    ones += adaptive_k(result.model.forward(r.data.x(i))) == 1 ? 1 : 0;
  }
  EXPECT_GE(ones, static_cast<int>(0.95 * static_cast<double>(r.data.size())));
  EXPECT_EQ(result.log.degenerate_examples, 0u);
}

TEST(TrainCardinality, ZeroLambdaUsesLargerCommittees) {
  SyntheticSpec spec;
  spec.n_examples = 1500;
  spec.separation = 2.0;
  spec.seed = 13;
  const auto data = generate_synthetic(spec);
  ExpertPoolSpec pool_spec;
  pool_spec.seed = 14;
  const auto pool = generate_experts(data, spec.n_classes, pool_spec);
  TrainConfig config;
  config.epochs = 15;
  config.learning_rate = 0.05;
  const auto policy =
      train_policy(data, pool.set, pool.predictions, Penalty::ZeroOne, linear_shape(), config)
          .model;
  double k_bar[2] = {0.0, 0.0};
  const double lambdas[2] = {0.0, 1.0};
  for (int i = 0; i < 2; ++i) {
    CardinalityLossConfig card;
    card.metric = DecisionRule::TopKMembership;
    card.lambda = lambdas[i];
    const auto model =
        train_cardinality(data, policy, pool.set, pool.predictions, card, linear_shape(), config)
            .model;
    const auto report =
        evaluate(data, pool.set, pool.predictions, policy, &model, 1, DecisionRule::TopKMembership);
    k_bar[i] = report.k_bar;
  }
  EXPECT_GE(k_bar[0], k_bar[1]);
}

TEST(TrainCardinality, SingleEntityAlwaysPicksOne) {
  Dataset data;
  data.feature_dim = 1;
  EntityPredictions preds(1);
  for (int i = 0; i < 20; ++i) {
    data.ids.push_back(i);
    data.features.push_back(0.1 * i);
    data.targets.emplace_back(1.0);
    preds.add(i, {Output{0.5}});
  }
  const auto set = EntitySet::two_stage(std::vector<double>{});
  TrainConfig config;
  config.epochs = 2;
  const auto policy =
      train_policy(data, set, preds, Penalty::SquaredError, linear_shape(), config).model;
  CardinalityLossConfig card;
  card.metric = DecisionRule::MinCost;
  const auto result = train_cardinality(data, policy, set, preds, card, linear_shape(), config);
  EXPECT_EQ(result.log.degenerate_examples, data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(adaptive_k(result.model.forward(data.x(i))), 1);
  }
}

TEST(Infer, FixedKBudget) {
  // Scores rank entity 1 then 3 first.
  const ScoreModel policy({Architecture::Linear, 1, 0, 3, Activation::Tanh},
                          {0, 0, 0, 2.0, 0.0, 1.0});
  const std::vector<double> betas{0.0, 0.05, 0.03};
  const std::vector<Output> preds{ClassId{1}, ClassId{2}, ClassId{2}};
  const auto out = infer(policy, nullptr, 2, std::vector<double>{1.0}, preds, betas,
                         DecisionRule::MajorityVote);
  EXPECT_EQ(std::vector<int>(out.selection.ranked().begin(), out.selection.ranked().end()),
            (std::vector<int>{1, 3}));
  EXPECT_NEAR(out.budget, 0.03, 1e-15);
  EXPECT_EQ(std::get<ClassId>(*out.aggregate), ClassId{1});
}

TEST(Infer, TopOneMatchesArgmax) {
  const ScoreModel policy({Architecture::Linear, 1, 0, 3, Activation::Tanh},
                          {1.0, -1.0, 0.5, 0.0, 0.0, 0.0});
  const std::vector<double> betas{0.0, 0.0, 0.0};
  const std::vector<Output> preds{ClassId{1}, ClassId{2}, ClassId{3}};
  const auto out = infer(policy, nullptr, 1, std::vector<double>{-2.0}, preds, betas,
                         DecisionRule::WeightedVote);
  EXPECT_EQ(out.selection.ranked()[0], 2);
  EXPECT_EQ(std::get<ClassId>(*out.aggregate), ClassId{2});
}

TEST(Infer, AdaptiveOneHotCardinality) {
  const ScoreModel policy({Architecture::Linear, 1, 0, 4, Activation::Tanh},
                          {0, 0, 0, 0, 4.0, 3.0, 2.0, 1.0});
  const ScoreModel card({Architecture::Linear, 1, 0, 4, Activation::Tanh},
                        {0, 0, 0, 0, 0.0, 0.0, 1.0, 0.0});
  const std::vector<double> betas{0.0, 0.01, 0.02, 0.04};
  const std::vector<Output> preds{Output{1.0}, Output{2.0}, Output{3.0}, Output{4.0}};
  const auto out = infer(policy, &card, 1, std::vector<double>{0.0}, preds, betas,
                         DecisionRule::UniformAverage);
  EXPECT_EQ(out.k, 3);
  EXPECT_EQ(std::vector<int>(out.selection.ranked().begin(), out.selection.ranked().end()),
            (std::vector<int>{1, 2, 3}));
  EXPECT_NEAR(out.budget, 0.03, 1e-15);
  EXPECT_EQ(std::get<double>(*out.aggregate), 2.0);
}

TEST(AdaptiveK, SmallestOnTies) {
  EXPECT_EQ(adaptive_k(std::vector<double>{0.2, 0.9, 0.9}), 2);
  EXPECT_EQ(adaptive_k(std::vector<double>{0.0}), 1);
}

TEST(FitRegressor, RecoversALinearTarget) {
  SyntheticSpec spec;
  spec.task = SyntheticTask::Regression;
  spec.feature_dim = 4;
  spec.n_examples = 600;
  spec.noise = 0.05;
  spec.seed = 8;
  const auto data = generate_synthetic(spec);
  TrainConfig config;
  config.epochs = 40;
  config.batch_size = 32;
  config.learning_rate = 0.01;
  const auto fit = fit_regressor(data, linear_shape(), config);
  double sse = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double r = fit.model.forward(data.x(i))[0] - std::get<double>(data.targets[i]);
    sse += r * r;
  }
  // Irreducible error is noise^2 = 0.0025.
  EXPECT_LT(sse / static_cast<double>(data.size()), 0.01);
  EXPECT_GE(fit.log.best_epoch, 1);
}

TEST(FitRegressor, RejectsClassTargets) {
  const auto s = separable(50, 1);
  EXPECT_THROW(fit_regressor(s.data, linear_shape(), TrainConfig{}), OutputKindError);
}

TEST(RegressionPool, EntitiesAndPredictionsLineUp) {
  SyntheticSpec spec;
  spec.task = SyntheticTask::Regression;
  spec.feature_dim = 3;
  spec.n_examples = 300;
  spec.seed = 4;
  const auto data = generate_synthetic(spec);
  const auto [head, tail] = split_positions(data.size(), 0.8, 2);
  const auto train = data.subset(head);
  const auto test = data.subset(tail);
  RegressionPoolSpec pool_spec;
  pool_spec.n_experts = 3;
  pool_spec.train.epochs = 3;
  const auto pool = build_regression_pool(train, test, pool_spec);
  EXPECT_EQ(pool.set.regime().kind(), RegimeKind::TwoStage);
  EXPECT_EQ(pool.set.size(), 4);
  EXPECT_EQ(pool.train_predictions.size(), train.size());
  EXPECT_EQ(pool.test_predictions.size(), test.size());
  for (auto id : test.ids) EXPECT_TRUE(pool.test_predictions.contains(id));
  const auto again = build_regression_pool(train, test, pool_spec);
  for (auto id : test.ids) {
    EXPECT_EQ(std::get<double>(pool.test_predictions.row(id)[2]),
              std::get<double>(again.test_predictions.row(id)[2]));
  }
}
