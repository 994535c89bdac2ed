#include "deferkit/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "deferkit/error.hpp"

namespace deferkit {

std::string to_string(DecisionRule rule) {
  switch (rule) {
    case DecisionRule::TopKMembership: return "top_k";
    case DecisionRule::MajorityVote: return "majority";
    case DecisionRule::WeightedVote: return "weighted_vote";
    case DecisionRule::MinCost: return "min_cost";
    case DecisionRule::UniformAverage: return "uniform_average";
    case DecisionRule::WeightedAverage: return "weighted_average";
  }
  return "majority";
}

DecisionRule decision_rule_from_string(const std::string& name) {
  if (name == "top_k") return DecisionRule::TopKMembership;
  if (name == "majority") return DecisionRule::MajorityVote;
  if (name == "weighted_vote") return DecisionRule::WeightedVote;
  if (name == "min_cost") return DecisionRule::MinCost;
  if (name == "uniform_average") return DecisionRule::UniformAverage;
  if (name == "weighted_average") return DecisionRule::WeightedAverage;
  throw ConfigError("rule", "unknown decision rule '" + name + "'");
}

bool is_classification_rule(DecisionRule rule) {
  return rule == DecisionRule::TopKMembership || rule == DecisionRule::MajorityVote ||
         rule == DecisionRule::WeightedVote;
}

namespace {

const Output& prediction_of(std::span<const Output> predictions, int index) {
  if (index < 1 || index > static_cast<int>(predictions.size())) {
    throw ArgumentError("selection refers to entity " + std::to_string(index) +
                        " beyond the prediction row");
  }
  return predictions[static_cast<std::size_t>(index - 1)];
}

int class_of(std::span<const Output> predictions, int index) {
  const auto* c = std::get_if<ClassId>(&prediction_of(predictions, index));
  if (c == nullptr) throw OutputKindError("classification rule needs class-id predictions");
  return c->value;
}

double real_of(std::span<const Output> predictions, int index) {
  const auto* v = std::get_if<double>(&prediction_of(predictions, index));
  if (v == nullptr) throw OutputKindError("regression rule needs real predictions");
  return *v;
}

}  // namespace

std::vector<double> committee_weights(const TopKSet& selection, std::span<const double> scores) {
  const auto ranked = selection.ranked();
  double max_score = -std::numeric_limits<double>::infinity();
  for (int j : ranked) max_score = std::max(max_score, scores[static_cast<std::size_t>(j - 1)]);
  std::vector<double> w(ranked.size());
  double total = 0.0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    w[i] = std::exp(scores[static_cast<std::size_t>(ranked[i] - 1)] - max_score);
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

ClassId aggregate_classify(const TopKSet& selection, std::span<const Output> predictions,
                           std::span<const double> scores, DecisionRule rule) {
  if (rule != DecisionRule::MajorityVote && rule != DecisionRule::WeightedVote) {
    throw ArgumentError("aggregate_classify supports majority and weighted_vote rules");
  }
  const auto ranked = selection.ranked();
  std::vector<double> weights(ranked.size(), 1.0);
  if (rule == DecisionRule::WeightedVote) weights = committee_weights(selection, scores);

  // (class, tally) pairs; committees are small so a flat scan is fine.
  std::vector<std::pair<int, double>> tally;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const int c = class_of(predictions, ranked[i]);
    auto it = std::find_if(tally.begin(), tally.end(), [c](const auto& p) { return p.first == c; });
    if (it == tally.end()) {
      tally.emplace_back(c, weights[i]);
    } else {
      it->second += weights[i];
    }
  }
  auto best = tally.front();
  for (const auto& entry : tally) {
    if (entry.second > best.second || (entry.second == best.second && entry.first < best.first)) {
      best = entry;
    }
  }
  return ClassId{best.first};
}

double aggregate_real(const TopKSet& selection, std::span<const Output> predictions,
                      std::span<const double> scores, DecisionRule rule) {
  const auto ranked = selection.ranked();
  if (rule == DecisionRule::UniformAverage) {
    double sum = 0.0;
    for (int j : ranked) sum += real_of(predictions, j);
    return sum / static_cast<double>(ranked.size());
  }
  if (rule == DecisionRule::WeightedAverage) {
    const auto w = committee_weights(selection, scores);
    double sum = 0.0;
    for (std::size_t i = 0; i < ranked.size(); ++i) sum += w[i] * real_of(predictions, ranked[i]);
    return sum;
  }
  throw ArgumentError("aggregate_real supports uniform_average and weighted_average rules");
}

double aggregate_regress(const TopKSet& selection, std::span<const Output> predictions,
                         std::span<const double> scores, double target, Penalty base_loss,
                         DecisionRule rule) {
  if (base_loss == Penalty::ZeroOne) {
    throw ArgumentError("regression aggregation needs a real-valued base loss");
  }
  const Output z{target};
  if (rule == DecisionRule::MinCost) {
    double best = std::numeric_limits<double>::infinity();
    for (int j : selection.ranked()) {
      best = std::min(best, penalty_value(base_loss, Output{real_of(predictions, j)}, z));
    }
    return best;
  }
  if (rule == DecisionRule::UniformAverage || rule == DecisionRule::WeightedAverage) {
    return penalty_value(base_loss, Output{aggregate_real(selection, predictions, scores, rule)},
                         z);
  }
  throw ArgumentError("aggregate_regress supports min_cost, uniform_average, weighted_average");
}

double committee_loss(const TopKSet& selection, std::span<const Output> predictions,
                      std::span<const double> scores, const Output& target, DecisionRule rule,
                      Penalty regression_loss) {
  if (is_classification_rule(rule)) {
    const auto* y = std::get_if<ClassId>(&target);
    if (y == nullptr) throw OutputKindError("classification rule needs a class-id target");
    if (rule == DecisionRule::TopKMembership) {
      for (int j : selection.ranked()) {
        if (class_of(predictions, j) == y->value) return 0.0;
      }
      return 1.0;
    }
    return aggregate_classify(selection, predictions, scores, rule) == *y ? 0.0 : 1.0;
  }
  const auto* z = std::get_if<double>(&target);
  if (z == nullptr) throw OutputKindError("regression rule needs a real target");
  return aggregate_regress(selection, predictions, scores, *z, regression_loss, rule);
}

}  // namespace deferkit
