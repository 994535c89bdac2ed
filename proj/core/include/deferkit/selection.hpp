#pragma once

#include <span>
#include <vector>

namespace deferkit {

// Policy scores pi(x, j) over |A| entities. Non-finite entries are rejected
// at construction.
class ScoreVector {
 public:
  ScoreVector() = default;
  explicit ScoreVector(std::vector<double> scores);

  std::size_t size() const { return scores_.size(); }
  // 1-based entity index.
  double score(int index) const { return scores_.at(static_cast<std::size_t>(index - 1)); }
  std::span<const double> values() const { return scores_; }

 private:
  std::vector<double> scores_;
};

// Ranked top-k selection set: k distinct 1-based entity indices, scores
// non-increasing along `ranked`, equal scores ordered by ascending index.
class TopKSet {
 public:
  TopKSet(int universe, std::vector<int> ranked);

  int k() const { return static_cast<int>(ranked_.size()); }
  int universe() const { return universe_; }
  std::span<const int> ranked() const { return ranked_; }
  bool contains(int index) const;
  // First `length` entries; length in [1, k].
  TopKSet prefix(int length) const;

  friend bool operator==(const TopKSet&, const TopKSet&) = default;

 private:
  int universe_;
  std::vector<int> ranked_;
};

// Strict ranking order: higher score first, then smaller index.
inline bool ranks_before(double score_a, int index_a, double score_b, int index_b) {
  return score_a > score_b || (score_a == score_b && index_a < index_b);
}

TopKSet top_k(const ScoreVector& scores, int k);
TopKSet top_k(std::span<const double> scores, int k);

// top_k with k = |A|.
TopKSet full_ranking(const ScoreVector& scores);
TopKSet full_ranking(std::span<const double> scores);

std::vector<int> membership_vector(const TopKSet& set, int size);

}  // namespace deferkit
