#pragma once

// Data layer: synthetic Gaussian mixtures with exact conditionals, expert
// pools, tabular ingestion, and the on-disk formats.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deferkit/bayes.hpp"
#include "deferkit/entities.hpp"

namespace deferkit {

struct Dataset {
  int feature_dim = 0;
  std::vector<std::int64_t> ids;
  std::vector<double> features;  // row-major, size() x feature_dim
  std::vector<Output> targets;
  std::vector<DiscreteConditional> conditionals;  // empty unless synthetic

  std::size_t size() const { return ids.size(); }
  std::span<const double> x(std::size_t i) const {
    return std::span<const double>(features).subspan(i * static_cast<std::size_t>(feature_dim),
                                                      static_cast<std::size_t>(feature_dim));
  }
  bool has_conditionals() const { return !conditionals.empty(); }
  // Rows in the given order; conditionals follow when present.
  Dataset subset(std::span<const std::size_t> positions) const;
  void validate() const;
};

enum class SyntheticTask { Classification, Regression };

// Classification: class c has mean `separation` * e_c for c < d and
// -`separation` * e_{c-d} for d <= c < 2d, unit covariance.
// Regression: z = w.x + e with w_i = 1/sqrt(d) and e = +-noise equiprobable,
// so the conditional has two support points.
struct SyntheticSpec {
  SyntheticTask task = SyntheticTask::Classification;
  int n_classes = 10;
  int feature_dim = 10;
  int n_examples = 1000;
  double separation = 3.0;
  double noise = 0.5;           // regression only
  std::vector<double> priors;   // empty: uniform
  std::uint64_t seed = 0;

  void validate() const;
};

Dataset generate_synthetic(const SyntheticSpec& spec);

// Class means used by generate_synthetic, row c for class c + 1.
std::vector<std::vector<double>> mixture_means(const SyntheticSpec& spec);

struct ExpertPoolSpec {
  int n_experts = 6;
  // 1-based classes per expert; empty selects default_specialties().
  std::vector<std::vector<int>> specialties;
  double p = 0.94;
  std::vector<double> fees;  // empty selects default_fees(n_experts)
  double alpha = 1.0;
  std::uint64_t seed = 0;

  void validate(int n_classes) const;
};

// {0.05, 0.045, 0.04, 0.035, 0.03} with the first expert most expensive,
// continued in steps of -0.005 (floor 0.005) beyond five experts.
std::vector<double> default_fees(int n_experts);

// Classes are cut into consecutive blocks of `size`; expert e takes block
// e mod (number of blocks).
std::vector<std::vector<int>> default_specialties(int n_classes, int n_experts, int size = 5);

struct ExpertPool {
  EntitySet set;
  EntityPredictions predictions;
  // accuracy[e][c]: probability that expert e + 1 is correct on class c + 1.
  std::vector<std::vector<double>> accuracy;
};

// One-stage pool over a classification dataset: on a specialty class the
// expert is correct with probability p and otherwise names a uniformly drawn
// wrong class; off its specialty it names a uniformly drawn class.
ExpertPool generate_experts(const Dataset& data, int n_classes, const ExpertPoolSpec& spec);

// mu_bar under the generative model, integrating over the experts' draws:
// labels 1 - p(j|x); expert e: alpha (1 - sum_c p(c|x) acc_e(c)) + beta_e.
std::vector<double> model_expected_costs(const ExpertPool& pool, const DiscreteConditional& cond);

struct TabularSchema {
  std::vector<std::string> feature_columns;  // empty: every column but target/id
  std::string target_column = "target";
  std::string id_column = "example_id";      // optional in the file
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

struct TabularData {
  Dataset train;
  Dataset test;
  std::vector<std::string> feature_names;
  std::vector<double> means;      // training split
  std::vector<double> variances;  // training split, before flooring
  std::vector<std::string> warnings;
};

// Seeded split with floor(train_fraction * n) training rows, then features
// standardized with training statistics only (variance floor 1e-12).
TabularData load_tabular(const std::string& path, const TabularSchema& schema);

// Positions 0..n-1 permuted by `seed`; the first floor(fraction * n) are
// returned as the first half of the pair.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_positions(
    std::size_t n, double fraction, std::uint64_t seed);

// File formats.
void write_dataset_csv(const Dataset& data, const std::string& path);
Dataset read_dataset_csv(const std::string& path, OutputKind kind);
void write_conditionals_json(const Dataset& data, const std::string& path);
void read_conditionals_json(Dataset& data, const std::string& path);
void write_predictions_csv(const EntityPredictions& preds, const std::string& path);
EntityPredictions read_predictions_csv(const std::string& path, OutputKind kind);
void write_entity_set_json(const EntitySet& set, const std::string& path);
EntitySet read_entity_set_json(const std::string& path);

}  // namespace deferkit
