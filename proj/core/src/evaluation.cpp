#include "deferkit/evaluation.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "deferkit/csv.hpp"
#include "deferkit/error.hpp"
#include "deferkit/training.hpp"

namespace deferkit {

nlohmann::json to_json(const MetricsReport& r) {
  return {{"rule", r.rule},           {"k_mode", r.k_mode},
          {"k_bar", r.k_bar},         {"budget_bar", r.budget_bar},
          {"metric_name", r.metric_name}, {"value", r.value},
          {"n_examples", r.n_examples},   {"seed", r.seed}};
}

std::string metric_name(DecisionRule rule) {
  switch (rule) {
    case DecisionRule::TopKMembership: return "acc_top_k";
    case DecisionRule::MajorityVote: return "acc_maj";
    case DecisionRule::WeightedVote: return "acc_w_vl";
    case DecisionRule::MinCost: return "rmse_min";
    case DecisionRule::UniformAverage: return "rmse_avg";
    case DecisionRule::WeightedAverage: return "rmse_w_avg";
  }
  return "acc_maj";
}

MetricsReport evaluate_selections(const Dataset& data, const EntitySet& set,
                                  const EntityPredictions& predictions,
                                  std::span<const double> scores, std::span<const int> ks,
                                  DecisionRule rule) {
  const auto m = static_cast<std::size_t>(set.size());
  if (data.size() == 0) throw ArgumentError("evaluate: empty dataset");
  if (scores.size() != data.size() * m || ks.size() != data.size()) {
    throw ArgumentError("evaluate: need |A| scores and one k per example");
  }
  const bool classification = is_classification_rule(rule);
  for (const auto& t : data.targets) {
    if ((kind_of(t) == OutputKind::Class) != classification) {
      throw ConfigError("rule", to_string(rule) + " does not match the dataset's target kind");
    }
  }
  const auto betas = set.betas();
  double d_total = 0.0;
  double budget_total = 0.0;
  double k_total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto s = scores.subspan(i * m, m);
    const auto selection = top_k(s, ks[i]);
    for (int j : selection.ranked()) budget_total += betas[static_cast<std::size_t>(j - 1)];
    k_total += ks[i];
    d_total += committee_loss(selection, predictions.row(data.ids[i]), s, data.targets[i], rule,
                              Penalty::SquaredError);
  }
  const double n = static_cast<double>(data.size());
  MetricsReport report;
  report.rule = to_string(rule);
  report.k_mode = "fixed";
  report.k_bar = k_total / n;
  report.budget_bar = budget_total / n;
  report.metric_name = metric_name(rule);
  report.value = classification ? 1.0 - d_total / n : std::sqrt(d_total / n);
  report.n_examples = data.size();
  return report;
}

std::vector<double> policy_scores(const ScoreModel& policy, const Dataset& data) {
  const auto m = static_cast<std::size_t>(policy.shape().output_dim);
  std::vector<double> out(data.size() * m);
  for (std::size_t i = 0; i < data.size(); ++i) {
    policy.forward(data.x(i), std::span<double>(out).subspan(i * m, m));
  }
  return out;
}

MetricsReport evaluate(const Dataset& data, const EntitySet& set,
                       const EntityPredictions& predictions, const ScoreModel& policy,
                       const ScoreModel* cardinality, int fixed_k, DecisionRule rule) {
  if (policy.shape().output_dim != set.size()) {
    throw ConfigError("policy", "output dimension does not match the entity set");
  }
  const auto scores = policy_scores(policy, data);
  std::vector<int> ks(data.size(), fixed_k);
  if (cardinality != nullptr) {
    for (std::size_t i = 0; i < data.size(); ++i) ks[i] = adaptive_k(cardinality->forward(data.x(i)));
  } else if (fixed_k < 1 || fixed_k > set.size()) {
    throw ConfigError("k", "must lie in 1..|A|");
  }
  auto report = evaluate_selections(data, set, predictions, scores, ks, rule);
  report.k_mode = cardinality != nullptr ? "adaptive" : "fixed";
  return report;
}

void write_frontier_csv(std::span<const FrontierRow> rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("path", "cannot write " + path);
  out << "k_or_lambda,budget_bar,k_bar,metric\n";
  for (const auto& r : rows) {
    out << csv::format(r.k_or_lambda) << ',' << csv::format(r.budget_bar) << ','
        << csv::format(r.k_bar) << ',' << csv::format(r.metric) << '\n';
  }
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid{1e-9, 0.01, 0.05, 0.25, 0.5};
  for (int i = 2; i <= 13; ++i) grid.push_back(0.5 * i);
  return grid;
}

}  // namespace deferkit
