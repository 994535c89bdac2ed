#pragma once

// Fixed-order model cascades expressed as top-k and top-k(x) policies.

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace deferkit {

// conf(x, j) in [0, 1], one row of |A| values per example id (entity order).
class ConfidenceTable {
 public:
  explicit ConfidenceTable(int n_entities);

  void add(std::int64_t example_id, std::vector<double> row);
  std::span<const double> row(std::int64_t example_id) const;
  int n_entities() const { return n_entities_; }
  std::size_t size() const { return rows_.size(); }
  std::span<const std::int64_t> ids() const { return ids_; }

 private:
  int n_entities_;
  std::vector<std::int64_t> ids_;
  std::unordered_map<std::int64_t, std::vector<double>> rows_;
};

struct CascadeSpec {
  std::vector<int> order;          // rho, a permutation of 1..|A|
  std::vector<double> thresholds;  // nu_1 < ... < nu_|A|, all in (0, 1)

  int size() const { return static_cast<int>(order.size()); }
  void validate() const;
};

// Members rho_1..rho_k get 2 - r/(k+1) at prefix rank r; the remaining
// entities get -r'/(|A|+1) at rank r' among non-members in rho order.
// Returned in entity order.
std::vector<double> cascade_scores(const CascadeSpec& spec, int k);

// Smallest stage i with conf(rho_i, x) >= nu_i, else |A|.
int default_stop(const CascadeSpec& spec, std::span<const double> confidence);

struct CascadePolicy {
  int k_hat = 1;
  std::vector<double> scores;              // cascade_scores(spec, k_hat)
  std::vector<double> cardinality_scores;  // one-hot at v = k_hat
};

CascadePolicy adaptive_cascade(const CascadeSpec& spec, std::span<const double> confidence);

// True iff some ordering of 1..size has every set in `targets` as a prefix.
bool realizable_by_fixed_order(int size, std::span<const std::vector<int>> targets);

// Pi_2(x) = {1, 3} and Pi_2(x') = {1, 2} over three entities: true when no
// fixed order realizes both.
bool separating_example_check();

struct CascadeFile {
  CascadeSpec spec;
  ConfidenceTable confidence{1};
};

// JSON {order, thresholds, confidence_csv_path}; a relative CSV path is
// resolved against the JSON file's directory.
CascadeFile load_cascade(const std::string& path);

}  // namespace deferkit
