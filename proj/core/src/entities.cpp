#include "deferkit/entities.hpp"

#include <cmath>
#include <sstream>

#include "deferkit/error.hpp"

namespace deferkit {

OutputKind kind_of(const Output& value) {
  return std::holds_alternative<ClassId>(value) ? OutputKind::Class : OutputKind::Real;
}

std::string to_string(const Output& value) {
  if (const auto* c = std::get_if<ClassId>(&value)) return std::to_string(c->value);
  std::ostringstream os;
  os.precision(17);
  os << std::get<double>(value);
  return os.str();
}

Regime Regime::one_stage(int n_labels) {
  if (n_labels < 2) throw ArgumentError("one-stage regime requires n >= 2 labels");
  return Regime(RegimeKind::OneStage, n_labels);
}

Regime Regime::two_stage() { return Regime(RegimeKind::TwoStage, 0); }

std::string to_string(RegimeKind kind) {
  return kind == RegimeKind::OneStage ? "one_stage" : "two_stage";
}

RegimeKind regime_kind_from_string(const std::string& name) {
  if (name == "one_stage") return RegimeKind::OneStage;
  if (name == "two_stage") return RegimeKind::TwoStage;
  throw ConfigError("regime", "unknown regime '" + name + "'");
}

std::string to_string(EntityKind kind) {
  switch (kind) {
    case EntityKind::Label: return "label";
    case EntityKind::BasePredictor: return "base_predictor";
    case EntityKind::Expert: return "expert";
  }
  return "expert";
}

EntityKind entity_kind_from_string(const std::string& name) {
  if (name == "label") return EntityKind::Label;
  if (name == "base_predictor") return EntityKind::BasePredictor;
  if (name == "expert") return EntityKind::Expert;
  throw ConfigError("kind", "unknown entity kind '" + name + "'");
}

EntitySet::EntitySet(Regime regime, std::vector<Entity> entities)
    : regime_(regime), entities_(std::move(entities)) {
  if (entities_.empty()) throw ArgumentError("entity set must not be empty");
  for (std::size_t pos = 0; pos < entities_.size(); ++pos) {
    const Entity& e = entities_[pos];
    const int expected = static_cast<int>(pos) + 1;
    if (e.index != expected) {
      throw ArgumentError("entity indices must be contiguous from 1; found " +
                          std::to_string(e.index) + " at position " + std::to_string(expected));
    }
    if (!(e.alpha >= 0.0) || !(e.beta >= 0.0) || !std::isfinite(e.alpha) ||
        !std::isfinite(e.beta)) {
      throw ArgumentError("entity " + std::to_string(e.index) +
                          ": alpha and beta must be finite and non-negative");
    }
    if (regime_.kind() == RegimeKind::OneStage) {
      const bool is_label_slot = e.index <= regime_.n_labels();
      if (is_label_slot && (e.kind != EntityKind::Label || e.ref != e.index)) {
        throw ArgumentError("entity " + std::to_string(e.index) +
                            ": one-stage indices 1..n must be labels of their own class");
      }
      if (!is_label_slot && e.kind != EntityKind::Expert) {
        throw ArgumentError("entity " + std::to_string(e.index) +
                            ": one-stage indices above n must be experts");
      }
    } else {
      if (e.index == 1 && e.kind != EntityKind::BasePredictor) {
        throw ArgumentError("two-stage entity 1 must be the base predictor");
      }
      if (e.index > 1 && e.kind != EntityKind::Expert) {
        throw ArgumentError("entity " + std::to_string(e.index) +
                            ": two-stage indices above 1 must be experts");
      }
    }
  }
  if (regime_.kind() == RegimeKind::OneStage && size() < regime_.n_labels()) {
    throw ArgumentError("one-stage entity set is missing label entities");
  }
}

EntitySet EntitySet::one_stage(int n_labels, std::span<const double> expert_fees,
                               double label_alpha, double expert_alpha) {
  std::vector<Entity> entities;
  entities.reserve(static_cast<std::size_t>(n_labels) + expert_fees.size());
  for (int c = 1; c <= n_labels; ++c) {
    entities.push_back({c, EntityKind::Label, c, label_alpha, 0.0});
  }
  for (std::size_t e = 0; e < expert_fees.size(); ++e) {
    const int index = n_labels + static_cast<int>(e) + 1;
    entities.push_back({index, EntityKind::Expert, static_cast<int>(e) + 1, expert_alpha,
                        expert_fees[e]});
  }
  return EntitySet(Regime::one_stage(n_labels), std::move(entities));
}

EntitySet EntitySet::two_stage(std::span<const double> expert_fees, double base_beta,
                               double alpha) {
  std::vector<Entity> entities;
  entities.push_back({1, EntityKind::BasePredictor, 0, alpha, base_beta});
  for (std::size_t e = 0; e < expert_fees.size(); ++e) {
    entities.push_back(
        {static_cast<int>(e) + 2, EntityKind::Expert, static_cast<int>(e) + 1, alpha,
         expert_fees[e]});
  }
  return EntitySet(Regime::two_stage(), std::move(entities));
}

int EntitySet::n_experts() const {
  int count = 0;
  for (const auto& e : entities_) count += e.kind == EntityKind::Expert ? 1 : 0;
  return count;
}

const Entity& EntitySet::at(int index) const {
  if (index < 1 || index > size()) {
    throw LookupError("entity index " + std::to_string(index) + " outside 1.." +
                      std::to_string(size()));
  }
  return entities_[static_cast<std::size_t>(index - 1)];
}

std::vector<double> EntitySet::betas() const {
  std::vector<double> out;
  out.reserve(entities_.size());
  for (const auto& e : entities_) out.push_back(e.beta);
  return out;
}

std::string to_string(Penalty penalty) {
  switch (penalty) {
    case Penalty::ZeroOne: return "zero_one";
    case Penalty::SquaredError: return "squared_error";
    case Penalty::AbsoluteError: return "absolute_error";
  }
  return "zero_one";
}

Penalty penalty_from_string(const std::string& name) {
  if (name == "zero_one") return Penalty::ZeroOne;
  if (name == "squared_error") return Penalty::SquaredError;
  if (name == "absolute_error") return Penalty::AbsoluteError;
  throw ConfigError("penalty", "unknown penalty '" + name + "'");
}

OutputKind output_kind_for(Penalty penalty) {
  return penalty == Penalty::ZeroOne ? OutputKind::Class : OutputKind::Real;
}

double penalty_value(Penalty penalty, const Output& prediction, const Output& target) {
  const OutputKind want = output_kind_for(penalty);
  if (kind_of(prediction) != want || kind_of(target) != want) {
    throw OutputKindError("penalty " + to_string(penalty) + " expects " +
                          (want == OutputKind::Class ? "class ids" : "real values"));
  }
  switch (penalty) {
    case Penalty::ZeroOne:
      return std::get<ClassId>(prediction) == std::get<ClassId>(target) ? 0.0 : 1.0;
    case Penalty::SquaredError: {
      const double diff = std::get<double>(prediction) - std::get<double>(target);
      return diff * diff;
    }
    case Penalty::AbsoluteError:
      return std::abs(std::get<double>(prediction) - std::get<double>(target));
  }
  return 0.0;
}

double entity_cost(const Entity& entity, const Output& prediction, const Output& target,
                   Penalty penalty) {
  return entity.alpha * penalty_value(penalty, prediction, target) + entity.beta;
}

EntityPredictions::EntityPredictions(int n_entities) : n_entities_(n_entities) {
  if (n_entities < 1) throw ArgumentError("prediction table needs at least one entity");
}

void EntityPredictions::add(std::int64_t example_id, std::vector<Output> row) {
  if (static_cast<int>(row.size()) != n_entities_) {
    throw ArgumentError("example " + std::to_string(example_id) + " has " +
                        std::to_string(row.size()) + " predictions, expected " +
                        std::to_string(n_entities_));
  }
  if (!positions_.emplace(example_id, ids_.size()).second) {
    throw ArgumentError("duplicate example id " + std::to_string(example_id));
  }
  ids_.push_back(example_id);
  values_.insert(values_.end(), std::make_move_iterator(row.begin()),
                 std::make_move_iterator(row.end()));
}

bool EntityPredictions::contains(std::int64_t example_id) const {
  return positions_.contains(example_id);
}

std::span<const Output> EntityPredictions::row(std::int64_t example_id) const {
  const auto it = positions_.find(example_id);
  if (it == positions_.end()) {
    throw LookupError("no predictions for example id " + std::to_string(example_id));
  }
  return row_at(it->second);
}

std::span<const Output> EntityPredictions::row_at(std::size_t position) const {
  if (position >= ids_.size()) throw LookupError("prediction row out of range");
  return std::span<const Output>(values_).subspan(position * n_entities_, n_entities_);
}

void EntityPredictions::validate(const EntitySet& set) const {
  if (set.size() != n_entities_) {
    throw ArgumentError("prediction table has " + std::to_string(n_entities_) +
                        " entities but the entity set has " + std::to_string(set.size()));
  }
  if (set.regime().kind() != RegimeKind::OneStage) return;
  const int n = set.regime().n_labels();
  for (std::size_t pos = 0; pos < ids_.size(); ++pos) {
    const auto r = row_at(pos);
    for (int j = 1; j <= n; ++j) {
      const auto* c = std::get_if<ClassId>(&r[static_cast<std::size_t>(j - 1)]);
      if (c == nullptr || c->value != j) {
        throw ArgumentError("example " + std::to_string(ids_[pos]) + ": label entity " +
                            std::to_string(j) + " must predict class " + std::to_string(j));
      }
    }
  }
}

std::vector<double> cost_vector(const EntitySet& set, std::span<const Output> row,
                                const Output& target, Penalty penalty) {
  if (static_cast<int>(row.size()) != set.size()) {
    throw ArgumentError("prediction row length does not match entity set size");
  }
  std::vector<double> costs(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) {
    costs[j] = entity_cost(set.entities()[j], row[j], target, penalty);
  }
  return costs;
}

std::vector<double> cost_vector(const EntitySet& set, const EntityPredictions& predictions,
                                std::int64_t example_id, const Output& target,
                                Penalty penalty) {
  return cost_vector(set, predictions.row(example_id), target, penalty);
}

}  // namespace deferkit
