#pragma once

// Ground truth for top-k deferral: expected costs under a known conditional,
// the Bayes-optimal top-k selection, Chow's rule as a special case, and the
// Gamma_u transforms behind the consistency bound.

#include <cstdint>
#include <span>
#include <vector>

#include "deferkit/entities.hpp"
#include "deferkit/losses.hpp"
#include "deferkit/selection.hpp"

namespace deferkit {

// p(z | x) over a finite support. Probabilities are non-negative and sum to
// one within 1e-12.
class DiscreteConditional {
 public:
  DiscreteConditional(std::vector<Output> support, std::vector<double> probs);

  std::span<const Output> support() const { return support_; }
  std::span<const double> probs() const { return probs_; }

 private:
  std::vector<Output> support_;
  std::vector<double> probs_;
};

struct ExpectedCostVector {
  std::vector<double> values;  // mu_bar_j(x), entry j-1 for entity j
};

ExpectedCostVector expected_costs(const EntitySet& set, std::span<const Output> row,
                                  const DiscreteConditional& conditional, Penalty penalty);
ExpectedCostVector expected_costs(const EntitySet& set, const EntityPredictions& predictions,
                                  std::int64_t example_id, const DiscreteConditional& conditional,
                                  Penalty penalty);

// The k entities with the smallest expected cost, ascending by cost with
// ties broken by ascending index.
TopKSet bayes_top_k(std::span<const double> expected, int k);
TopKSet bayes_top_k(const ExpectedCostVector& expected, int k);

// Same rule on realized per-example costs. This is the `empirical-oracle`
// baseline for data without a known conditional.
TopKSet empirical_oracle_top_k(std::span<const double> realized_costs, int k);

struct ChowDecision {
  bool abstain = false;
  int label = 0;  // 1-based class, meaningful when !abstain

  static ChowDecision predict(int label) { return {false, label}; }
  static ChowDecision reject() { return {true, 0}; }
  friend bool operator==(const ChowDecision&, const ChowDecision&) = default;
};

// Chow's rule via the Bayes top-1 oracle on labels 1..n plus an abstain
// entity with alpha = 0 and beta = lambda.
ChowDecision chow_rule(std::span<const double> class_posteriors, double lambda);

struct GammaOptions {
  // Enables the u in (0, 1) branch, whose published form is ambiguous.
  bool allow_experimental = false;
};

// Gamma_u(v): u = 0 -> 1 - sqrt(1 - v^2); u = 1 -> ((1+v)/2) log(1+v) + ((1-v)/2) log(1-v);
// u = 2 -> v / |A|. For u in {0, 1}, v must lie in [0, 1).
double gamma(CompSumParam u, double v, int cardinality, GammaOptions options = {});

// Generalized inverse by monotone bisection (tolerance 1e-10). For t at or
// above the supremum of a bounded Gamma_u the result is capped at 1.
double gamma_inverse(CompSumParam u, double t, int cardinality, GammaOptions options = {});

// Finite X with known per-x expected costs; all risks are exact sums.
struct FiniteProblem {
  std::vector<double> x_probs;                     // P(X = x)
  std::vector<std::vector<double>> expected_costs;  // mu_bar(x), one vector per x

  int n_points() const { return static_cast<int>(x_probs.size()); }
  int n_entities() const;
  void validate() const;
};

// inf over all score vectors of sum_j weights_j Phi^u_01(s, j), in closed form
// for u in {0, 1, 2}.
double surrogate_infimum(std::span<const double> weights, CompSumParam u);

struct BoundReport {
  int k = 1;
  double u = 1.0;
  double S = 0.0;
  double excess_true = 0.0;
  double excess_surrogate = 0.0;
  double bound = 0.0;
  // Two-stage base-predictor term; zero when the base predictor is the
  // per-x cost minimizer, as in the synthetic checks.
  double base_gap = 0.0;
  bool holds = false;
};

struct BoundCheckOptions {
  // Multiplies the computed bound. Values below 1 are a fault-injection hook
  // for exercising the checker itself.
  double bound_scale = 1.0;
  double tolerance = 1e-9;
};

// Excess true top-k risk against k S Gamma_u^{-1}(excess surrogate / S), with
// S = (|A| - 1) sum_j E_X[mu_bar_j(X)]. `policy` holds one score vector per x.
BoundReport check_consistency_bound(const FiniteProblem& problem,
                                    std::span<const ScoreVector> policy, int k, CompSumParam u,
                                    BoundCheckOptions options = {});

// Scores -mu_bar(x). Under the shared tie rule their top-k is exactly the
// Bayes top-k at every x.
std::vector<ScoreVector> bayes_policy_scores(const FiniteProblem& problem);

}  // namespace deferkit
