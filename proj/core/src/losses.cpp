#include "deferkit/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "deferkit/error.hpp"

namespace deferkit {

CompSumParam::CompSumParam(double u) : u_(u) {
  if (!std::isfinite(u) || u < 0.0) {
    throw ArgumentError("comp-sum parameter u must be finite and >= 0");
  }
}

double psi(double v, CompSumParam u) {
  if (u.u() == 1.0) return std::log1p(v);
  const double a = 1.0 - u.u();
  return std::expm1(a * std::log1p(v)) / a;
}

namespace {

double log_sum_exp(std::span<const double> scores) {
  const double m = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (double s : scores) sum += std::exp(s - m);
  return m + std::log(sum);
}

// Psi^u expressed in the gap L = log(1 + v) >= 0.
double psi_of_gap(double gap, double u) {
  if (u == 1.0) return gap;
  const double a = 1.0 - u;
  return std::expm1(a * gap) / a;
}

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw ArgumentError(std::string(what) + ": length mismatch");
  if (a == 0) throw ArgumentError(std::string(what) + ": empty input");
}

}  // namespace

std::vector<double> comp_sum_phi_all(std::span<const double> scores, CompSumParam u) {
  if (scores.empty()) throw ArgumentError("comp_sum_phi: empty scores");
  for (double s : scores) {
    if (!std::isfinite(s)) throw ArgumentError("comp_sum_phi: scores must be finite");
  }
  const double lse = log_sum_exp(scores);
  std::vector<double> phi(scores.size());
  for (std::size_t j = 0; j < scores.size(); ++j) {
    phi[j] = psi_of_gap(std::max(0.0, lse - scores[j]), u.u());
  }
  return phi;
}

double comp_sum_phi(const ScoreVector& scores, int index, CompSumParam u) {
  if (index < 1 || index > static_cast<int>(scores.size())) {
    throw ArgumentError("comp_sum_phi: entity index out of range");
  }
  return comp_sum_phi_all(scores.values(), u)[static_cast<std::size_t>(index - 1)];
}

double weighted_comp_sum(std::span<const double> scores, std::span<const double> weights,
                         CompSumParam u, std::span<double> grad) {
  check_lengths(scores.size(), weights.size(), "weighted_comp_sum");
  if (!grad.empty() && grad.size() != scores.size()) {
    throw ArgumentError("weighted_comp_sum: gradient buffer has the wrong length");
  }
  const std::size_t n = scores.size();
  const double m = *std::max_element(scores.begin(), scores.end());
  if (!std::isfinite(m)) throw ArgumentError("weighted_comp_sum: scores must be finite");
  double z = 0.0;
  for (double s : scores) z += std::exp(s - m);
  const double lse = m + std::log(z);
  const double a = 1.0 - u.u();

  double value = 0.0;
  double weighted_slope = 0.0;  // sum_j w_j dPsi/dL (L_j)
  for (std::size_t j = 0; j < n; ++j) {
    const double gap = std::max(0.0, lse - scores[j]);
    value += weights[j] * psi_of_gap(gap, u.u());
    if (!grad.empty()) {
      const double slope = (a == 0.0) ? 1.0 : std::exp(a * gap);
      grad[j] = -weights[j] * slope;
      weighted_slope += weights[j] * slope;
    }
  }
  if (!grad.empty()) {
    // dL_j/ds_i = p_i - delta_ij
    for (std::size_t i = 0; i < n; ++i) {
      grad[i] += std::exp(scores[i] - lse) * weighted_slope;
    }
  }
  return value;
}

std::vector<double> complement_weights(std::span<const double> costs) {
  const double total = std::accumulate(costs.begin(), costs.end(), 0.0);
  std::vector<double> tau(costs.size());
  for (std::size_t j = 0; j < costs.size(); ++j) tau[j] = total - costs[j];
  return tau;
}

double deferral_surrogate(const ScoreVector& scores, std::span<const double> costs,
                          CompSumParam u) {
  return deferral_surrogate(scores.values(), costs, u);
}

double deferral_surrogate(std::span<const double> scores, std::span<const double> costs,
                          CompSumParam u, std::span<double> grad) {
  check_lengths(scores.size(), costs.size(), "deferral_surrogate");
  const auto tau = complement_weights(costs);
  return weighted_comp_sum(scores, tau, u, grad);
}

double true_deferral_loss(std::span<const double> costs, const TopKSet& selection) {
  if (static_cast<int>(costs.size()) != selection.universe()) {
    throw ArgumentError("true_deferral_loss: cost vector length does not match |A|");
  }
  double loss = 0.0;
  for (int j : selection.ranked()) loss += costs[static_cast<std::size_t>(j - 1)];
  return loss;
}

double upper_bound_rhs(const ScoreVector& scores, std::span<const double> costs, int k,
                       CompSumParam u) {
  const int size = static_cast<int>(costs.size());
  if (k < 1 || k > size) throw ArgumentError("upper_bound_rhs: k out of range");
  const double total = std::accumulate(costs.begin(), costs.end(), 0.0);
  return deferral_surrogate(scores, costs, u) - static_cast<double>(size - 1 - k) * total;
}

double one_stage_top1_loss(int selected, int label, int n_labels,
                           std::span<const double> expert_costs) {
  const int size = n_labels + static_cast<int>(expert_costs.size());
  if (selected < 1 || selected > size) throw ArgumentError("selected entity out of range");
  if (selected <= n_labels) return selected != label ? 1.0 : 0.0;
  return expert_costs[static_cast<std::size_t>(selected - n_labels - 1)];
}

double two_stage_top1_loss(int selected, std::span<const double> costs) {
  if (selected < 1 || selected > static_cast<int>(costs.size())) {
    throw ArgumentError("selected entity out of range");
  }
  return costs[static_cast<std::size_t>(selected - 1)];
}

std::string to_string(BudgetTransform xi) {
  switch (xi) {
    case BudgetTransform::Identity: return "identity";
    case BudgetTransform::Sqrt: return "sqrt";
    case BudgetTransform::Log1p: return "log1p";
    case BudgetTransform::Square: return "square";
  }
  return "identity";
}

BudgetTransform budget_transform_from_string(const std::string& name) {
  if (name == "identity") return BudgetTransform::Identity;
  if (name == "sqrt") return BudgetTransform::Sqrt;
  if (name == "log1p") return BudgetTransform::Log1p;
  if (name == "square") return BudgetTransform::Square;
  throw ConfigError("xi", "unknown budget transform '" + name + "'");
}

double apply(BudgetTransform xi, double budget) {
  switch (xi) {
    case BudgetTransform::Identity: return budget;
    case BudgetTransform::Sqrt: return std::sqrt(budget);
    case BudgetTransform::Log1p: return std::log1p(budget);
    case BudgetTransform::Square: return budget * budget;
  }
  return budget;
}

void CardinalityLossConfig::validate() const {
  if (!std::isfinite(lambda) || lambda < 0.0) {
    throw ConfigError("lambda", "must be finite and >= 0");
  }
  if (apply(xi, 0.0) < 0.0) throw ConfigError("xi", "xi(0) must be >= 0");
  double prev = apply(xi, 0.0);
  for (int i = 1; i <= 1000; ++i) {
    const double value = apply(xi, 0.01 * i);
    if (value < prev) throw ConfigError("xi", "must be non-decreasing");
    prev = value;
  }
}

double cardinality_true_loss(const TopKSet& full_ranking, int k_hat, const ExampleView& example,
                             const CardinalityLossConfig& config, std::span<const double> betas) {
  const int size = full_ranking.universe();
  if (full_ranking.k() != size) {
    throw ArgumentError("cardinality_true_loss expects the full ranking");
  }
  if (k_hat < 1 || k_hat > size) throw ArgumentError("k_hat out of range");
  if (static_cast<int>(betas.size()) != size) throw ArgumentError("betas length mismatch");
  const TopKSet committee = full_ranking.prefix(k_hat);
  const double d = committee_loss(committee, example.predictions, example.scores, example.target,
                                  config.metric, config.regression_loss);
  double fees = 0.0;
  for (int j : committee.ranked()) fees += betas[static_cast<std::size_t>(j - 1)];
  return d + config.lambda * apply(config.xi, fees);
}

CardinalityWeights cardinality_weights(const TopKSet& full_ranking, const ExampleView& example,
                                       const CardinalityLossConfig& config,
                                       std::span<const double> betas) {
  const int size = full_ranking.universe();
  std::vector<double> loss(static_cast<std::size_t>(size));
  for (int v = 1; v <= size; ++v) {
    loss[static_cast<std::size_t>(v - 1)] =
        cardinality_true_loss(full_ranking, v, example, config, betas);
  }
  const auto [lo, hi] = std::minmax_element(loss.begin(), loss.end());
  CardinalityWeights out;
  out.weights.assign(loss.size(), 1.0);
  const double range = *hi - *lo;
  if (!(range > 0.0)) {
    out.degenerate = true;
    return out;
  }
  for (std::size_t i = 0; i < loss.size(); ++i) {
    out.weights[i] = 1.0 - (loss[i] - *lo) / range;
  }
  return out;
}

double cardinality_surrogate(const TopKSet& full_ranking,
                             std::span<const double> cardinality_scores,
                             const ExampleView& example, const CardinalityLossConfig& config,
                             std::span<const double> betas, CompSumParam u,
                             std::span<double> grad) {
  if (static_cast<int>(cardinality_scores.size()) != full_ranking.universe()) {
    throw ArgumentError("cardinality scores need one entry per candidate cardinality");
  }
  const auto w = cardinality_weights(full_ranking, example, config, betas);
  return weighted_comp_sum(cardinality_scores, w.weights, u, grad);
}

}  // namespace deferkit
