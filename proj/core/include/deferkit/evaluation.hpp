#pragma once

// Accuracy/RMSE, expected budget and expected committee size over a dataset.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "deferkit/aggregation.hpp"
#include "deferkit/datasets.hpp"
#include "deferkit/models.hpp"

namespace deferkit {

struct MetricsReport {
  std::string rule;
  std::string k_mode;  // "fixed", "adaptive", or "empirical-oracle"
  double k_bar = 0.0;
  double budget_bar = 0.0;
  std::string metric_name;
  double value = 0.0;
  std::size_t n_examples = 0;
  std::uint64_t seed = 0;
};

nlohmann::json to_json(const MetricsReport& report);

// acc_top_k, acc_maj, acc_w_vl, rmse_min, rmse_avg, rmse_w_avg.
std::string metric_name(DecisionRule rule);

// Per-example scores (row-major, |A| per example) and committee sizes.
// Classification rules report 1 - mean d; regression rules sqrt(mean d) with
// squared error as the base loss.
MetricsReport evaluate_selections(const Dataset& data, const EntitySet& set,
                                  const EntityPredictions& predictions,
                                  std::span<const double> scores, std::span<const int> ks,
                                  DecisionRule rule);

// Fixed k when `cardinality` is null, otherwise the adaptive k.
MetricsReport evaluate(const Dataset& data, const EntitySet& set,
                       const EntityPredictions& predictions, const ScoreModel& policy,
                       const ScoreModel* cardinality, int fixed_k, DecisionRule rule);

// Per-example policy scores, row-major.
std::vector<double> policy_scores(const ScoreModel& policy, const Dataset& data);

struct FrontierRow {
  double k_or_lambda = 0.0;
  double budget_bar = 0.0;
  double k_bar = 0.0;
  double metric = 0.0;
};

void write_frontier_csv(std::span<const FrontierRow> rows, const std::string& path);

// 1e-9, 0.01, 0.05, 0.25, 0.5, then 1 to 6.5 in steps of 0.5.
std::vector<double> default_lambda_grid();

}  // namespace deferkit
