#include "deferkit/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "deferkit/error.hpp"

namespace deferkit {

DiscreteConditional::DiscreteConditional(std::vector<Output> support, std::vector<double> probs)
    : support_(std::move(support)), probs_(std::move(probs)) {
  if (support_.empty() || support_.size() != probs_.size()) {
    throw ArgumentError("conditional support and probabilities must be non-empty and aligned");
  }
  double total = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw ArgumentError("conditional probabilities must be finite and non-negative");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ArgumentError("conditional probabilities sum to " + std::to_string(total));
  }
}

ExpectedCostVector expected_costs(const EntitySet& set, std::span<const Output> row,
                                  const DiscreteConditional& conditional, Penalty penalty) {
  if (static_cast<int>(row.size()) != set.size()) {
    throw ArgumentError("prediction row length does not match entity set size");
  }
  ExpectedCostVector out;
  out.values.assign(row.size(), 0.0);
  const auto support = conditional.support();
  const auto probs = conditional.probs();
  for (std::size_t j = 0; j < row.size(); ++j) {
    const Entity& e = set.entities()[j];
    double err = 0.0;
    for (std::size_t s = 0; s < support.size(); ++s) {
      if (probs[s] == 0.0) continue;
      err += probs[s] * penalty_value(penalty, row[j], support[s]);
    }
    out.values[j] = e.alpha * err + e.beta;
  }
  return out;
}

ExpectedCostVector expected_costs(const EntitySet& set, const EntityPredictions& predictions,
                                  std::int64_t example_id, const DiscreteConditional& conditional,
                                  Penalty penalty) {
  return expected_costs(set, predictions.row(example_id), conditional, penalty);
}

TopKSet bayes_top_k(std::span<const double> expected, int k) {
  const int size = static_cast<int>(expected.size());
  if (k < 1 || k > size) {
    throw ArgumentError("k = " + std::to_string(k) + " outside 1.." + std::to_string(size));
  }
  std::vector<int> order(static_cast<std::size_t>(size));
  std::iota(order.begin(), order.end(), 1);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return expected[static_cast<std::size_t>(a - 1)] < expected[static_cast<std::size_t>(b - 1)];
  });
  order.resize(static_cast<std::size_t>(k));
  return TopKSet(size, std::move(order));
}

TopKSet bayes_top_k(const ExpectedCostVector& expected, int k) {
  return bayes_top_k(expected.values, k);
}

TopKSet empirical_oracle_top_k(std::span<const double> realized_costs, int k) {
  return bayes_top_k(realized_costs, k);
}

ChowDecision chow_rule(std::span<const double> class_posteriors, double lambda) {
  const int n = static_cast<int>(class_posteriors.size());
  if (n < 2) throw ArgumentError("chow_rule needs at least two classes");
  if (!(lambda > 0.0)) throw ArgumentError("chow_rule needs lambda > 0");

  const std::vector<double> abstain_fee{lambda};
  const EntitySet augmented = EntitySet::one_stage(n, abstain_fee, 1.0, 0.0);
  std::vector<Output> row;
  std::vector<Output> support;
  for (int c = 1; c <= n; ++c) {
    row.emplace_back(ClassId{c});
    support.emplace_back(ClassId{c});
  }
  row.emplace_back(ClassId{1});  // abstain output is irrelevant: alpha = 0
  const DiscreteConditional conditional(
      support, std::vector<double>(class_posteriors.begin(), class_posteriors.end()));
  const auto mu = expected_costs(augmented, row, conditional, Penalty::ZeroOne);
  const int chosen = bayes_top_k(mu, 1).ranked()[0];
  return chosen == n + 1 ? ChowDecision::reject() : ChowDecision::predict(chosen);
}

namespace {

bool is_experimental_u(double u) { return u > 0.0 && u < 1.0; }

void check_supported(double u, GammaOptions options) {
  if (u == 0.0 || u == 1.0 || u == 2.0) return;
  if (is_experimental_u(u)) {
    if (!options.allow_experimental) {
      throw DomainError("Gamma_u for u in (0, 1) is experimental; enable it explicitly");
    }
    return;
  }
  throw DomainError("Gamma_u is only defined here for u in {0, 1, 2} and (0, 1)");
}

// Evaluates Gamma_u on the closed domain; v = 1 is taken as the limit.
double gamma_closed(double u, double v, int cardinality) {
  const double card = static_cast<double>(cardinality);
  if (u == 0.0) return 1.0 - std::sqrt(std::max(0.0, 1.0 - v * v));
  if (u == 1.0) {
    const double lower = v >= 1.0 ? 0.0 : 0.5 * (1.0 - v) * std::log1p(-v);
    return 0.5 * (1.0 + v) * std::log1p(v) + lower;
  }
  if (u == 2.0) return v / card;
  const double e = 1.0 / (1.0 - u);
  const double mean = 0.5 * (std::pow(1.0 + v, e) + std::pow(std::max(0.0, 1.0 - v), e));
  return (std::pow(mean, 1.0 - u) - 1.0) / (u * std::pow(card, u));
}

bool bounded_domain(double u) { return u != 2.0; }

}  // namespace

double gamma(CompSumParam u, double v, int cardinality, GammaOptions options) {
  check_supported(u.u(), options);
  if (cardinality < 1) throw ArgumentError("gamma: cardinality must be >= 1");
  if (!std::isfinite(v) || v < 0.0) throw DomainError("gamma: v must be finite and >= 0");
  if ((u.u() == 0.0 || u.u() == 1.0) && v >= 1.0) {
    throw DomainError("gamma: v must lie in [0, 1) for u in {0, 1}");
  }
  if (is_experimental_u(u.u()) && v > 1.0) throw DomainError("gamma: v must lie in [0, 1]");
  return gamma_closed(u.u(), v, cardinality);
}

double gamma_inverse(CompSumParam u, double t, int cardinality, GammaOptions options) {
  check_supported(u.u(), options);
  if (cardinality < 1) throw ArgumentError("gamma_inverse: cardinality must be >= 1");
  if (!std::isfinite(t) || t < 0.0) throw DomainError("gamma_inverse: t must be finite and >= 0");
  if (t == 0.0) return 0.0;

  double lo = 0.0;
  double hi = 1.0;
  if (bounded_domain(u.u())) {
    if (t >= gamma_closed(u.u(), 1.0, cardinality)) return 1.0;
  } else {
    while (gamma_closed(u.u(), hi, cardinality) < t) hi *= 2.0;
  }
  while (hi - lo > 1e-10 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (gamma_closed(u.u(), mid, cardinality) < t) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

int FiniteProblem::n_entities() const {
  return expected_costs.empty() ? 0 : static_cast<int>(expected_costs.front().size());
}

void FiniteProblem::validate() const {
  if (x_probs.empty() || x_probs.size() != expected_costs.size()) {
    throw ArgumentError("finite problem needs one expected-cost vector per point");
  }
  double total = 0.0;
  for (double p : x_probs) {
    if (!std::isfinite(p) || p < 0.0) throw ArgumentError("point probabilities must be >= 0");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ArgumentError("point probabilities must sum to 1");
  const int size = n_entities();
  if (size < 2) throw ArgumentError("finite problem needs at least two entities");
  for (const auto& mu : expected_costs) {
    if (static_cast<int>(mu.size()) != size) throw ArgumentError("ragged expected costs");
    for (double c : mu) {
      if (!std::isfinite(c) || c < 0.0) throw ArgumentError("expected costs must be >= 0");
    }
  }
}

double surrogate_infimum(std::span<const double> weights, CompSumParam u) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (u.u() == 1.0) {
    double value = 0.0;
    for (double w : weights) {
      if (w > 0.0) value -= w * std::log(w / total);
    }
    return value;
  }
  if (u.u() == 0.0) {
    double root_sum = 0.0;
    for (double w : weights) root_sum += std::sqrt(w);
    return root_sum * root_sum - total;
  }
  if (u.u() == 2.0) {
    return total - *std::max_element(weights.begin(), weights.end());
  }
  throw DomainError("surrogate infimum is available in closed form for u in {0, 1, 2} only");
}

BoundReport check_consistency_bound(const FiniteProblem& problem,
                                    std::span<const ScoreVector> policy, int k, CompSumParam u,
                                    BoundCheckOptions options) {
  problem.validate();
  const int size = problem.n_entities();
  if (static_cast<int>(policy.size()) != problem.n_points()) {
    throw ArgumentError("policy needs one score vector per point");
  }
  if (k < 1 || k > size) throw ArgumentError("k out of range");

  BoundReport report;
  report.k = k;
  report.u = u.u();
  double mean_cost_total = 0.0;
  double true_risk = 0.0;
  double bayes_risk = 0.0;
  double surrogate_risk = 0.0;
  double surrogate_floor = 0.0;
  for (int x = 0; x < problem.n_points(); ++x) {
    const double px = problem.x_probs[static_cast<std::size_t>(x)];
    const auto& mu = problem.expected_costs[static_cast<std::size_t>(x)];
    const auto& scores = policy[static_cast<std::size_t>(x)];
    if (static_cast<int>(scores.size()) != size) throw ArgumentError("policy score length");
    mean_cost_total += px * std::accumulate(mu.begin(), mu.end(), 0.0);
    true_risk += px * true_deferral_loss(mu, top_k(scores, k));
    bayes_risk += px * true_deferral_loss(mu, bayes_top_k(mu, k));
    const auto tau = complement_weights(mu);
    surrogate_risk += px * weighted_comp_sum(scores.values(), tau, u);
    surrogate_floor += px * surrogate_infimum(tau, u);
  }
  report.S = static_cast<double>(size - 1) * mean_cost_total;
  report.excess_true = std::max(0.0, true_risk - bayes_risk);
  report.excess_surrogate = std::max(0.0, surrogate_risk - surrogate_floor);
  if (report.S > 0.0) {
    report.bound = static_cast<double>(k) * report.S *
                   gamma_inverse(u, report.excess_surrogate / report.S, size);
  }
  report.bound *= options.bound_scale;
  report.holds = report.excess_true <= report.bound + report.base_gap + options.tolerance;
  return report;
}

std::vector<ScoreVector> bayes_policy_scores(const FiniteProblem& problem) {
  std::vector<ScoreVector> out;
  out.reserve(problem.expected_costs.size());
  for (const auto& mu : problem.expected_costs) {
    std::vector<double> s(mu.size());
    for (std::size_t j = 0; j < mu.size(); ++j) s[j] = -mu[j];
    out.emplace_back(std::move(s));
  }
  return out;
}

}  // namespace deferkit
