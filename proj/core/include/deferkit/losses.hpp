#pragma once

// Top-k deferral losses and their comp-sum surrogates.
//
// Costs are the per-entity augmented costs mu_j(x, z) = alpha_j psi(a_j(x), z) + beta_j,
// stored 0-based (entry j-1 belongs to entity j).

#include <span>
#include <string>
#include <vector>

#include "deferkit/aggregation.hpp"
#include "deferkit/entities.hpp"
#include "deferkit/selection.hpp"

namespace deferkit {

// Selects the outer function Psi^u of the comp-sum family:
//   Psi^1(v) = log(1 + v)                          (logistic / cross-entropy)
//   Psi^u(v) = ((1 + v)^(1-u) - 1) / (1 - u)       (u != 1)
// u = 0 gives the sum-exponential loss, u = 2 the MAE loss.
class CompSumParam {
 public:
  explicit CompSumParam(double u);

  static CompSumParam logistic() { return CompSumParam(1.0); }
  static CompSumParam sum_exponential() { return CompSumParam(0.0); }
  static CompSumParam mae() { return CompSumParam(2.0); }

  double u() const { return u_; }

 private:
  double u_;
};

// Psi^u(v) for v >= 0.
double psi(double v, CompSumParam u);

// Phi^u_01(pi, x, j) for every entity j, computed from the log-sum-exp gap
// lse(s) - s_j so that large score differences never overflow the inner sum.
std::vector<double> comp_sum_phi_all(std::span<const double> scores, CompSumParam u);

// Phi^u_01(pi, x, j) for a single 1-based entity index.
double comp_sum_phi(const ScoreVector& scores, int index, CompSumParam u);

// sum_j weights_j * Phi^u_01(s, j). When `grad` is non-empty it receives the
// gradient with respect to the scores (overwritten, same length as scores).
double weighted_comp_sum(std::span<const double> scores, std::span<const double> weights,
                         CompSumParam u, std::span<double> grad = {});

// tau_j = sum_{i != j} mu_i, evaluated as total - mu_j.
std::vector<double> complement_weights(std::span<const double> costs);

// k-independent surrogate sum_j tau_j Phi^u_01(pi, x, j). There is no k
// parameter: one trained policy serves every cardinality.
double deferral_surrogate(const ScoreVector& scores, std::span<const double> costs,
                          CompSumParam u);
double deferral_surrogate(std::span<const double> scores, std::span<const double> costs,
                          CompSumParam u, std::span<double> grad = {});

// Total cost of the selected committee: sum_{j in Pi_k} mu_j.
double true_deferral_loss(std::span<const double> costs, const TopKSet& selection);

// Right-hand side of the upper bound on the top-k deferral loss:
//   surrogate - (|A| - 1 - k) * sum_j mu_j.
double upper_bound_rhs(const ScoreVector& scores, std::span<const double> costs, int k,
                       CompSumParam u);

// Classic top-1 deferral losses, kept for reduction checks.
// One-stage: 1{h != y} 1{h <= n} + sum_j c_j 1{h = n + j}.
double one_stage_top1_loss(int selected, int label, int n_labels,
                           std::span<const double> expert_costs);
// Two-stage: c_selected.
double two_stage_top1_loss(int selected, std::span<const double> costs);

// Non-decreasing transform xi applied to the committee's fee total.
enum class BudgetTransform { Identity, Sqrt, Log1p, Square };

std::string to_string(BudgetTransform xi);
BudgetTransform budget_transform_from_string(const std::string& name);
double apply(BudgetTransform xi, double budget);

struct CardinalityLossConfig {
  DecisionRule metric = DecisionRule::MajorityVote;
  double lambda = 0.0;
  BudgetTransform xi = BudgetTransform::Identity;
  Penalty regression_loss = Penalty::SquaredError;

  // lambda >= 0, xi(0) >= 0 and xi non-decreasing on a sampled grid.
  void validate() const;
};

// One example as seen by the cardinality loss.
struct ExampleView {
  std::span<const Output> predictions;  // full |A| row
  std::span<const double> scores;       // policy scores, used by weighted rules
  Output target;
};

// d(Pi_{k_hat}(x), x, z) + lambda * xi(sum of the first k_hat ranked fees).
double cardinality_true_loss(const TopKSet& full_ranking, int k_hat, const ExampleView& example,
                             const CardinalityLossConfig& config, std::span<const double> betas);

struct CardinalityWeights {
  std::vector<double> weights;  // 1 - normalized loss, one per candidate v = 1..|A|
  bool degenerate = false;      // every candidate had the same loss
};

// Per-example min-max normalization of the cardinality loss over v = 1..|A|.
// When all candidates tie the weights are uniformly 1.
CardinalityWeights cardinality_weights(const TopKSet& full_ranking, const ExampleView& example,
                                       const CardinalityLossConfig& config,
                                       std::span<const double> betas);

// sum_v (1 - normalized_loss(v)) Phi^u_01(k_theta, x, v).
double cardinality_surrogate(const TopKSet& full_ranking,
                             std::span<const double> cardinality_scores,
                             const ExampleView& example, const CardinalityLossConfig& config,
                             std::span<const double> betas, CompSumParam u,
                             std::span<double> grad = {});

}  // namespace deferkit
