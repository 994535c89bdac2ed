#pragma once

// Decision rules over a selected committee of entities, and the per-example
// committee loss d(Pi_k(x), x, z) used by the cardinality-aware loss and the
// evaluation metrics.

#include <span>
#include <string>
#include <vector>

#include "deferkit/entities.hpp"
#include "deferkit/selection.hpp"

namespace deferkit {

enum class DecisionRule {
  TopKMembership,   // classification: correct iff the label is among committee outputs
  MajorityVote,     // classification
  WeightedVote,     // classification, softmax weights over the committee
  MinCost,          // regression: best committee member
  UniformAverage,   // regression
  WeightedAverage,  // regression, softmax weights over the committee
};

std::string to_string(DecisionRule rule);
DecisionRule decision_rule_from_string(const std::string& name);
bool is_classification_rule(DecisionRule rule);

// Softmax of the scores of the selected entities, renormalized over the
// committee. Entry i belongs to selection.ranked()[i].
std::vector<double> committee_weights(const TopKSet& selection, std::span<const double> scores);

// `predictions` is the full |A| row of entity outputs for one example.
ClassId aggregate_classify(const TopKSet& selection, std::span<const Output> predictions,
                           std::span<const double> scores, DecisionRule rule);

// Aggregated real prediction for UniformAverage / WeightedAverage.
double aggregate_real(const TopKSet& selection, std::span<const Output> predictions,
                      std::span<const double> scores, DecisionRule rule);

// Regression committee loss under `base_loss` (squared or absolute error).
double aggregate_regress(const TopKSet& selection, std::span<const Output> predictions,
                         std::span<const double> scores, double target, Penalty base_loss,
                         DecisionRule rule);

// d(Pi, x, z): 0/1 error for classification rules, regression loss otherwise.
double committee_loss(const TopKSet& selection, std::span<const Output> predictions,
                      std::span<const double> scores, const Output& target, DecisionRule rule,
                      Penalty regression_loss = Penalty::SquaredError);

}  // namespace deferkit
