#include "deferkit/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "deferkit/csv.hpp"
#include "deferkit/error.hpp"

namespace deferkit {

ConfidenceTable::ConfidenceTable(int n_entities) : n_entities_(n_entities) {
  if (n_entities < 1) throw ArgumentError("confidence table needs at least one entity");
}

void ConfidenceTable::add(std::int64_t example_id, std::vector<double> row) {
  if (static_cast<int>(row.size()) != n_entities_) {
    throw ArgumentError("confidence row has the wrong length");
  }
  for (double c : row) {
    if (!(c >= 0.0 && c <= 1.0)) throw ArgumentError("confidences must lie in [0, 1]");
  }
  if (!rows_.emplace(example_id, std::move(row)).second) {
    throw ArgumentError("duplicate example id " + std::to_string(example_id));
  }
  ids_.push_back(example_id);
}

std::span<const double> ConfidenceTable::row(std::int64_t example_id) const {
  const auto it = rows_.find(example_id);
  if (it == rows_.end()) {
    throw LookupError("no confidences for example id " + std::to_string(example_id));
  }
  return it->second;
}

void CascadeSpec::validate() const {
  const int n = size();
  if (n < 1) throw ArgumentError("cascade order must not be empty");
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (int j : order) {
    if (j < 1 || j > n || seen[static_cast<std::size_t>(j - 1)]) {
      throw ArgumentError("cascade order must be a permutation of 1..|A|");
    }
    seen[static_cast<std::size_t>(j - 1)] = 1;
  }
  if (static_cast<int>(thresholds.size()) != n) {
    throw ArgumentError("cascade needs one threshold per stage");
  }
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    const double t = thresholds[i];
    if (!(t > 0.0 && t < 1.0)) throw ArgumentError("cascade thresholds must lie in (0, 1)");
    if (i > 0 && !(t > thresholds[i - 1])) {
      throw ArgumentError("cascade thresholds must be strictly increasing");
    }
  }
}

std::vector<double> cascade_scores(const CascadeSpec& spec, int k) {
  spec.validate();
  const int n = spec.size();
  if (k < 1 || k > n) throw ArgumentError("cascade k must lie in 1..|A|");
  std::vector<double> scores(static_cast<std::size_t>(n));
  for (int r = 1; r <= n; ++r) {
    const int entity = spec.order[static_cast<std::size_t>(r - 1)];
    scores[static_cast<std::size_t>(entity - 1)] =
        r <= k ? 2.0 - static_cast<double>(r) / (k + 1)
               : -static_cast<double>(r - k) / (n + 1);
  }
  return scores;
}

int default_stop(const CascadeSpec& spec, std::span<const double> confidence) {
  spec.validate();
  if (static_cast<int>(confidence.size()) != spec.size()) {
    throw ArgumentError("confidence row has the wrong length");
  }
  for (int i = 1; i <= spec.size(); ++i) {
    const int entity = spec.order[static_cast<std::size_t>(i - 1)];
    if (confidence[static_cast<std::size_t>(entity - 1)] >=
        spec.thresholds[static_cast<std::size_t>(i - 1)]) {
      return i;
    }
  }
  return spec.size();
}

CascadePolicy adaptive_cascade(const CascadeSpec& spec, std::span<const double> confidence) {
  CascadePolicy policy;
  policy.k_hat = default_stop(spec, confidence);
  policy.scores = cascade_scores(spec, policy.k_hat);
  policy.cardinality_scores.assign(static_cast<std::size_t>(spec.size()), 0.0);
  policy.cardinality_scores[static_cast<std::size_t>(policy.k_hat - 1)] = 1.0;
  return policy;
}

bool realizable_by_fixed_order(int size, std::span<const std::vector<int>> targets) {
  std::vector<int> order(static_cast<std::size_t>(size));
  std::iota(order.begin(), order.end(), 1);
  do {
    bool all = true;
    for (const auto& target : targets) {
      if (target.size() > order.size()) return false;
      std::vector<int> prefix(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(target.size()));
      std::vector<int> want = target;
      std::sort(prefix.begin(), prefix.end());
      std::sort(want.begin(), want.end());
      if (prefix != want) {
        all = false;
        break;
      }
    }
    if (all) return true;
  } while (std::next_permutation(order.begin(), order.end()));
  return false;
}

bool separating_example_check() {
  const std::vector<std::vector<int>> targets{{1, 3}, {1, 2}};
  return !realizable_by_fixed_order(3, targets);
}

CascadeFile load_cascade(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("path", "cannot open " + path);
  nlohmann::json doc;
  CascadeFile out;
  try {
    in >> doc;
    out.spec.order = doc.at("order").get<std::vector<int>>();
    out.spec.thresholds = doc.at("thresholds").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cascade", path + ": " + e.what());
  }
  try {
    out.spec.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError("cascade", e.what());
  }
  std::filesystem::path csv_path = doc.value("confidence_csv_path", std::string());
  if (csv_path.empty()) return out;
  if (csv_path.is_relative()) csv_path = std::filesystem::path(path).parent_path() / csv_path;
  const auto table = csv::read(csv_path.string());
  const auto id_col = table.column("example_id");
  if (!id_col) throw MissingColumnError("example_id");
  out.confidence = ConfidenceTable(out.spec.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto id = csv::parse_int(row[*id_col]);
    if (!id) throw NonNumericCellError(table.line_numbers[r], "example_id", row[*id_col]);
    std::vector<double> values;
    for (int j = 1; j <= out.spec.size(); ++j) {
      const auto col = table.column("entity_" + std::to_string(j));
      if (!col) throw MissingColumnError("entity_" + std::to_string(j));
      const auto v = csv::parse_double(row[*col]);
      if (!v) throw NonNumericCellError(table.line_numbers[r], table.header[*col], row[*col]);
      values.push_back(*v);
    }
    try {
      out.confidence.add(*id, std::move(values));
    } catch (const ArgumentError& e) {
      throw ConfigError("confidence", e.what());
    }
  }
  return out;
}

}  // namespace deferkit
