#pragma once

// Entities: the unified action set for one-stage and two-stage deferral.
//
// Every interface uses 1-based entity indices. In the one-stage regime the
// labels occupy 1..n and experts n+1..n+J; in the two-stage regime index 1 is
// the base predictor and 2..J+1 are experts.

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace deferkit {

struct ClassId {
  int value = 0;
  friend bool operator==(const ClassId&, const ClassId&) = default;
};

// Output-space value: a class id (classification) or a real (regression).
using Output = std::variant<ClassId, double>;

enum class OutputKind { Class, Real };

OutputKind kind_of(const Output& value);
std::string to_string(const Output& value);

enum class RegimeKind { OneStage, TwoStage };

class Regime {
 public:
  static Regime one_stage(int n_labels);
  static Regime two_stage();

  RegimeKind kind() const { return kind_; }
  // Number of label entities; zero in the two-stage regime.
  int n_labels() const { return n_labels_; }

  friend bool operator==(const Regime&, const Regime&) = default;

 private:
  Regime(RegimeKind kind, int n_labels) : kind_(kind), n_labels_(n_labels) {}
  RegimeKind kind_;
  int n_labels_;
};

std::string to_string(RegimeKind kind);
RegimeKind regime_kind_from_string(const std::string& name);

enum class EntityKind { Label, BasePredictor, Expert };

std::string to_string(EntityKind kind);
EntityKind entity_kind_from_string(const std::string& name);

struct Entity {
  int index = 0;           // 1-based position in the entity set
  EntityKind kind = EntityKind::Expert;
  int ref = 0;             // class id for labels, expert id for experts, 0 otherwise
  double alpha = 1.0;      // error-penalty weight
  double beta = 0.0;       // consultation fee
};

class EntitySet {
 public:
  // Validates regime layout, contiguous indices, and non-negative costs.
  EntitySet(Regime regime, std::vector<Entity> entities);

  // Labels 1..n (alpha = label_alpha, beta = 0) followed by one expert per fee.
  static EntitySet one_stage(int n_labels, std::span<const double> expert_fees,
                             double label_alpha = 1.0, double expert_alpha = 1.0);
  // Base predictor at index 1 followed by one expert per fee.
  static EntitySet two_stage(std::span<const double> expert_fees, double base_beta = 0.0,
                             double alpha = 1.0);

  const Regime& regime() const { return regime_; }
  int size() const { return static_cast<int>(entities_.size()); }
  int n_experts() const;
  const Entity& at(int index) const;
  std::span<const Entity> entities() const { return entities_; }
  std::vector<double> betas() const;

 private:
  Regime regime_;
  std::vector<Entity> entities_;
};

enum class Penalty { ZeroOne, SquaredError, AbsoluteError };

std::string to_string(Penalty penalty);
Penalty penalty_from_string(const std::string& name);
OutputKind output_kind_for(Penalty penalty);

// psi(prediction, target). Throws OutputKindError when either value does not
// live in the penalty's output space.
double penalty_value(Penalty penalty, const Output& prediction, const Output& target);

// alpha * psi(prediction, target) + beta.
double entity_cost(const Entity& entity, const Output& prediction, const Output& target,
                   Penalty penalty);

// Per-example prediction table a_j(x), one row of |A| outputs per example id.
class EntityPredictions {
 public:
  explicit EntityPredictions(int n_entities);

  void add(std::int64_t example_id, std::vector<Output> row);

  int n_entities() const { return n_entities_; }
  std::size_t size() const { return ids_.size(); }
  bool contains(std::int64_t example_id) const;
  std::span<const Output> row(std::int64_t example_id) const;
  std::span<const Output> row_at(std::size_t position) const;
  std::int64_t id_at(std::size_t position) const { return ids_.at(position); }
  std::span<const std::int64_t> ids() const { return ids_; }

  // Row width matches the set, and one-stage label entities predict their
  // own class on every row.
  void validate(const EntitySet& set) const;

 private:
  int n_entities_;
  std::vector<std::int64_t> ids_;
  std::vector<Output> values_;
  std::unordered_map<std::int64_t, std::size_t> positions_;
};

std::vector<double> cost_vector(const EntitySet& set, std::span<const Output> row,
                                const Output& target, Penalty penalty);

std::vector<double> cost_vector(const EntitySet& set, const EntityPredictions& predictions,
                                std::int64_t example_id, const Output& target,
                                Penalty penalty);

}  // namespace deferkit
