#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deferkit/datasets.hpp"
#include "deferkit/entities.hpp"
#include "deferkit/losses.hpp"
#include "deferkit/models.hpp"

namespace deferkit {

struct TrainConfig {
  int epochs = 50;
  int batch_size = 256;
  double learning_rate = 0.002;
  double momentum = 0.9;
  std::uint64_t seed = 0;
  CompSumParam u = CompSumParam::logistic();
  double validation_fraction = 0.2;
  bool shuffle = true;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_surrogate = 0.0;  // full pass over the training split after the epoch
  double val_surrogate = 0.0;
  double wall_ms = 0.0;
};

struct TrainingLog {
  double initial_train = 0.0;
  double initial_val = 0.0;
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;  // 0 means the initial parameters were never beaten
  // Cardinality training only: examples whose candidate losses all tied and
  // fell back to uniform weights.
  std::size_t degenerate_examples = 0;

  // `epoch,train_surrogate,val_surrogate,wall_ms`
  void write_csv(const std::string& path) const;
  // `epoch,split,loss`, epoch 0 holding the initial losses.
  void write_loss_curve(const std::string& path) const;
};

struct TrainResult {
  ScoreModel model;
  TrainingLog log;
};

// Mini-batch SGD on the batch mean of sum_j w_ij Phi^u(model(x_i), j), with a
// seeded train/validation split and best-validation checkpoint selection.
// `weights` is row-major, one row of model.output_dim entries per example.
TrainResult fit_weighted_comp_sum(ScoreModel initial, const Dataset& data,
                                  std::span<const double> weights, const TrainConfig& config);

// Policy over the entity set, trained on the complement-weighted surrogate.
// `shape.output_dim` is forced to |A|.
TrainResult train_policy(const Dataset& data, const EntitySet& set,
                         const EntityPredictions& predictions, Penalty penalty, ModelShape shape,
                         const TrainConfig& config);

// Cardinality model over v = 1..|A| against the frozen policy.
TrainResult train_cardinality(const Dataset& data, const ScoreModel& policy, const EntitySet& set,
                              const EntityPredictions& predictions,
                              const CardinalityLossConfig& card_config, ModelShape shape,
                              const TrainConfig& config);

// Single-output regressor fit by mini-batch SGD on the mean squared error,
// with the same split, shuffling and checkpoint rules as the policy trainer.
// Targets must be real.
TrainResult fit_regressor(const Dataset& data, ModelShape shape, const TrainConfig& config);

// Two-stage regression entities: a base predictor fit on the whole training
// split and one expert per seeded subset of `subset_fraction` of it. All
// models are frozen before their predictions are tabulated.
struct RegressionPoolSpec {
  int n_experts = 4;
  double subset_fraction = 0.3;
  int hidden_dim = 16;
  std::vector<double> fees;  // empty selects default_fees(n_experts)
  double base_fee = 0.0;
  double alpha = 1.0;
  TrainConfig train;

  void validate() const;
};

struct RegressionPool {
  EntitySet set;
  EntityPredictions train_predictions;
  EntityPredictions test_predictions;
};

RegressionPool build_regression_pool(const Dataset& train, const Dataset& test,
                                     const RegressionPoolSpec& spec);

struct Inference {
  TopKSet selection;
  int k = 1;
  std::optional<Output> aggregate;  // empty for the TopKMembership rule
  double budget = 0.0;              // sum of selected fees
};

// argmax_v of the cardinality scores, smallest v on ties.
int adaptive_k(std::span<const double> cardinality_scores);

// Fixed k when `cardinality` is null, otherwise k = adaptive_k(cardinality(x)).
Inference infer(const ScoreModel& policy, const ScoreModel* cardinality, int fixed_k,
                std::span<const double> x, std::span<const Output> predictions,
                std::span<const double> betas, DecisionRule rule);

}  // namespace deferkit
