#include "deferkit/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "deferkit/csv.hpp"
#include "deferkit/error.hpp"
#include "deferkit/random.hpp"

namespace deferkit {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs", "must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size", "must be >= 1");
  if (!std::isfinite(learning_rate) || learning_rate < 0.0) {
    throw ConfigError("learning_rate", "must be finite and >= 0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum", "must lie in [0, 1)");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("validation_fraction", "must lie in (0, 1)");
  }
}

void TrainingLog::write_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("path", "cannot write " + path);
  out << "epoch,train_surrogate,val_surrogate,wall_ms\n";
  for (const auto& e : epochs) {
    out << e.epoch << ',' << csv::format(e.train_surrogate) << ',' << csv::format(e.val_surrogate)
        << ',' << csv::format(e.wall_ms) << '\n';
  }
}

void TrainingLog::write_loss_curve(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("path", "cannot write " + path);
  out << "epoch,split,loss\n";
  out << "0,train," << csv::format(initial_train) << '\n';
  out << "0,val," << csv::format(initial_val) << '\n';
  for (const auto& e : epochs) {
    out << e.epoch << ",train," << csv::format(e.train_surrogate) << '\n';
    out << e.epoch << ",val," << csv::format(e.val_surrogate) << '\n';
  }
}

namespace {

constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kShuffleStream = 2;
constexpr std::uint64_t kInitStream = 3;

double mean_loss(const ScoreModel& model, const Dataset& data, std::span<const double> weights,
                 std::span<const std::size_t> positions, CompSumParam u) {
  if (positions.empty()) return 0.0;
  const auto m = static_cast<std::size_t>(model.shape().output_dim);
  std::vector<double> scores(m);
  double total = 0.0;
  for (std::size_t p : positions) {
    model.forward(data.x(p), scores);
    total += weighted_comp_sum(scores, weights.subspan(p * m, m), u);
  }
  return total / static_cast<double>(positions.size());
}

void check_finite(double loss, int epoch) {
  if (!std::isfinite(loss) || loss > 1e6) {
    throw NumericalError("training diverged at epoch " + std::to_string(epoch) +
                         ": batch loss " + csv::format(loss));
  }
}

}  // namespace

TrainResult fit_weighted_comp_sum(ScoreModel initial, const Dataset& data,
                                  std::span<const double> weights, const TrainConfig& config) {
  config.validate();
  data.validate();
  if (data.size() < 2) throw ArgumentError("training needs at least two examples");
  const auto m = static_cast<std::size_t>(initial.shape().output_dim);
  if (weights.size() != data.size() * m) {
    throw ArgumentError("weight table must hold one row of output_dim entries per example");
  }

  // Seeded split: the first ceil(fraction * n) permuted positions validate.
  Rng split_rng(derive_seed(config.seed, kSplitStream));
  const auto perm = split_rng.permutation(data.size());
  auto n_val = static_cast<std::size_t>(
      std::ceil(config.validation_fraction * static_cast<double>(data.size())));
  n_val = std::clamp<std::size_t>(n_val, 1, data.size() - 1);
  const std::vector<std::size_t> val(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train(perm.begin() + static_cast<std::ptrdiff_t>(n_val), perm.end());

  ScoreModel model = std::move(initial);
  ScoreModel best = model;
  TrainingLog log;
  log.initial_train = mean_loss(model, data, weights, train, config.u);
  log.initial_val = mean_loss(model, data, weights, val, config.u);
  check_finite(log.initial_train, 0);
  double best_val = log.initial_val;

  Sgd optimizer(config.learning_rate, config.momentum);
  Rng shuffle_rng(derive_seed(config.seed, kShuffleStream));
  std::vector<double> scores(m);
  std::vector<double> upstream(m);
  std::vector<double> grad(model.theta().size());
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    if (config.shuffle) shuffle_rng.shuffle(std::span<std::size_t>(train));
    for (std::size_t b0 = 0; b0 < train.size(); b0 += batch) {
      const std::size_t b1 = std::min(train.size(), b0 + batch);
      const double scale = 1.0 / static_cast<double>(b1 - b0);
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t t = b0; t < b1; ++t) {
        const std::size_t p = train[t];
        model.forward(data.x(p), scores);
        batch_loss += weighted_comp_sum(scores, weights.subspan(p * m, m), config.u, upstream);
        for (double& g : upstream) g *= scale;
        model.backward(data.x(p), upstream, grad);
      }
      check_finite(batch_loss * scale, epoch);
      optimizer.step(model.mutable_theta(), grad);
    }
    EpochRecord record;
    record.epoch = epoch;
    record.train_surrogate = mean_loss(model, data, weights, train, config.u);
    record.val_surrogate = mean_loss(model, data, weights, val, config.u);
    check_finite(record.train_surrogate, epoch);
    record.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    log.epochs.push_back(record);
    if (record.val_surrogate < best_val) {
      best_val = record.val_surrogate;
      best = model;
      log.best_epoch = epoch;
    }
  }
  return TrainResult{std::move(best), std::move(log)};
}

TrainResult train_policy(const Dataset& data, const EntitySet& set,
                         const EntityPredictions& predictions, Penalty penalty, ModelShape shape,
                         const TrainConfig& config) {
  if (data.size() == 0) throw ArgumentError("train_policy: empty dataset");
  predictions.validate(set);
  shape.input_dim = data.feature_dim;
  shape.output_dim = set.size();
  const auto m = static_cast<std::size_t>(set.size());
  std::vector<double> weights;
  weights.reserve(data.size() * m);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto costs = cost_vector(set, predictions, data.ids[i], data.targets[i], penalty);
    const auto tau = complement_weights(costs);
    weights.insert(weights.end(), tau.begin(), tau.end());
  }
  auto model = ScoreModel::initialized(shape, derive_seed(config.seed, kInitStream));
  return fit_weighted_comp_sum(std::move(model), data, weights, config);
}

TrainResult train_cardinality(const Dataset& data, const ScoreModel& policy, const EntitySet& set,
                              const EntityPredictions& predictions,
                              const CardinalityLossConfig& card_config, ModelShape shape,
                              const TrainConfig& config) {
  if (data.size() == 0) throw ArgumentError("train_cardinality: empty dataset");
  card_config.validate();
  predictions.validate(set);
  if (policy.shape().output_dim != set.size()) {
    throw ArgumentError("policy output dimension does not match the entity set");
  }
  shape.input_dim = data.feature_dim;
  shape.output_dim = set.size();
  const auto m = static_cast<std::size_t>(set.size());
  const auto betas = set.betas();
  std::vector<double> weights;
  weights.reserve(data.size() * m);
  std::vector<double> scores(m);
  std::size_t degenerate = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    policy.forward(data.x(i), scores);
    const auto ranking = full_ranking(scores);
    const ExampleView view{predictions.row(data.ids[i]), scores, data.targets[i]};
    const auto w = cardinality_weights(ranking, view, card_config, betas);
    degenerate += w.degenerate ? 1 : 0;
    weights.insert(weights.end(), w.weights.begin(), w.weights.end());
  }
  auto model = ScoreModel::initialized(shape, derive_seed(config.seed, kInitStream + 1));
  auto result = fit_weighted_comp_sum(std::move(model), data, weights, config);
  result.log.degenerate_examples = degenerate;
  return result;
}

TrainResult fit_regressor(const Dataset& data, ModelShape shape, const TrainConfig& config) {
  config.validate();
  data.validate();
  if (data.size() < 2) throw ArgumentError("training needs at least two examples");
  shape.input_dim = data.feature_dim;
  shape.output_dim = 1;
  std::vector<double> y(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto* z = std::get_if<double>(&data.targets[i]);
    if (z == nullptr) throw OutputKindError("fit_regressor needs real targets");
    y[i] = *z;
  }

  Rng split_rng(derive_seed(config.seed, kSplitStream));
  const auto perm = split_rng.permutation(data.size());
  auto n_val = static_cast<std::size_t>(
      std::ceil(config.validation_fraction * static_cast<double>(data.size())));
  n_val = std::clamp<std::size_t>(n_val, 1, data.size() - 1);
  const std::vector<std::size_t> val(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train(perm.begin() + static_cast<std::ptrdiff_t>(n_val), perm.end());

  auto model = ScoreModel::initialized(shape, derive_seed(config.seed, kInitStream));
  const auto mse = [&](const std::vector<std::size_t>& positions) {
    double total = 0.0;
    double out = 0.0;
    for (std::size_t p : positions) {
      model.forward(data.x(p), std::span<double>(&out, 1));
      total += (out - y[p]) * (out - y[p]);
    }
    return total / static_cast<double>(positions.size());
  };

  ScoreModel best = model;
  TrainingLog log;
  log.initial_train = mse(train);
  log.initial_val = mse(val);
  check_finite(log.initial_train, 0);
  double best_val = log.initial_val;
  Sgd optimizer(config.learning_rate, config.momentum);
  Rng shuffle_rng(derive_seed(config.seed, kShuffleStream));
  std::vector<double> grad(model.theta().size());
  const auto batch = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    if (config.shuffle) shuffle_rng.shuffle(std::span<std::size_t>(train));
    for (std::size_t b0 = 0; b0 < train.size(); b0 += batch) {
      const std::size_t b1 = std::min(train.size(), b0 + batch);
      const double scale = 1.0 / static_cast<double>(b1 - b0);
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t t = b0; t < b1; ++t) {
        const std::size_t p = train[t];
        double out = 0.0;
        model.forward(data.x(p), std::span<double>(&out, 1));
        const double diff = out - y[p];
        batch_loss += diff * diff;
        const double upstream = 2.0 * diff * scale;
        model.backward(data.x(p), std::span<const double>(&upstream, 1), grad);
      }
      check_finite(batch_loss * scale, epoch);
      optimizer.step(model.mutable_theta(), grad);
    }
    EpochRecord record;
    record.epoch = epoch;
    record.train_surrogate = mse(train);
    record.val_surrogate = mse(val);
    check_finite(record.train_surrogate, epoch);
    record.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    log.epochs.push_back(record);
    if (record.val_surrogate < best_val) {
      best_val = record.val_surrogate;
      best = model;
      log.best_epoch = epoch;
    }
  }
  return TrainResult{std::move(best), std::move(log)};
}

void RegressionPoolSpec::validate() const {
  if (n_experts < 0) throw ConfigError("experts", "must be >= 0");
  if (!(subset_fraction > 0.0 && subset_fraction <= 1.0)) {
    throw ConfigError("subset_fraction", "must lie in (0, 1]");
  }
  if (hidden_dim < 1) throw ConfigError("hidden", "must be >= 1");
  if (!fees.empty() && static_cast<int>(fees.size()) != n_experts) {
    throw ConfigError("fees", "need one fee per expert");
  }
  if (!std::isfinite(base_fee) || base_fee < 0.0) throw ConfigError("base_fee", "must be >= 0");
  if (!std::isfinite(alpha) || alpha < 0.0) throw ConfigError("alpha", "must be >= 0");
  train.validate();
}

RegressionPool build_regression_pool(const Dataset& train, const Dataset& test,
                                     const RegressionPoolSpec& spec) {
  spec.validate();
  const ModelShape shape{Architecture::Mlp, train.feature_dim, spec.hidden_dim, 1,
                         Activation::Tanh};
  std::vector<ScoreModel> models;
  models.push_back(fit_regressor(train, shape, spec.train).model);
  for (int e = 1; e <= spec.n_experts; ++e) {
    const std::uint64_t stream = derive_seed(spec.train.seed, 100 + static_cast<std::uint64_t>(e));
    Rng rng(stream);
    auto perm = rng.permutation(train.size());
    const auto keep = std::max<std::size_t>(
        2, static_cast<std::size_t>(spec.subset_fraction * static_cast<double>(train.size())));
    perm.resize(std::min(keep, perm.size()));
    TrainConfig config = spec.train;
    config.seed = stream;
    models.push_back(fit_regressor(train.subset(perm), shape, config).model);
  }
  const auto fees = spec.fees.empty() ? default_fees(spec.n_experts) : spec.fees;
  RegressionPool pool{EntitySet::two_stage(fees, spec.base_fee, spec.alpha),
                      EntityPredictions(spec.n_experts + 1),
                      EntityPredictions(spec.n_experts + 1)};
  const auto tabulate = [&](const Dataset& data, EntityPredictions& out) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      std::vector<Output> row;
      for (const auto& m : models) row.emplace_back(m.forward(data.x(i))[0]);
      out.add(data.ids[i], std::move(row));
    }
  };
  tabulate(train, pool.train_predictions);
  tabulate(test, pool.test_predictions);
  return pool;
}

int adaptive_k(std::span<const double> cardinality_scores) {
  return top_k(cardinality_scores, 1).ranked()[0];
}

Inference infer(const ScoreModel& policy, const ScoreModel* cardinality, int fixed_k,
                std::span<const double> x, std::span<const Output> predictions,
                std::span<const double> betas, DecisionRule rule) {
  const auto scores = policy.forward(x);
  int k = fixed_k;
  if (cardinality != nullptr) k = adaptive_k(cardinality->forward(x));
  if (k < 1 || k > static_cast<int>(scores.size())) throw ArgumentError("k out of range");
  if (betas.size() != scores.size()) throw ArgumentError("betas length mismatch");
  Inference out{top_k(scores, k), k, std::nullopt, 0.0};
  for (int j : out.selection.ranked()) out.budget += betas[static_cast<std::size_t>(j - 1)];
  if (rule == DecisionRule::MajorityVote || rule == DecisionRule::WeightedVote) {
    out.aggregate = aggregate_classify(out.selection, predictions, scores, rule);
  } else if (rule == DecisionRule::UniformAverage || rule == DecisionRule::WeightedAverage) {
    out.aggregate = aggregate_real(out.selection, predictions, scores, rule);
  } else if (rule == DecisionRule::MinCost) {
    // Without a target the best member is unknown; report the top-ranked output.
    out.aggregate = predictions[static_cast<std::size_t>(out.selection.ranked()[0] - 1)];
  }
  return out;
}

}  // namespace deferkit
