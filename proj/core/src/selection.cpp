#include "deferkit/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "deferkit/error.hpp"

namespace deferkit {

ScoreVector::ScoreVector(std::vector<double> scores) : scores_(std::move(scores)) {
  for (std::size_t j = 0; j < scores_.size(); ++j) {
    if (!std::isfinite(scores_[j])) {
      throw ArgumentError("score for entity " + std::to_string(j + 1) + " is not finite");
    }
  }
}

TopKSet::TopKSet(int universe, std::vector<int> ranked)
    : universe_(universe), ranked_(std::move(ranked)) {
  if (ranked_.empty() || static_cast<int>(ranked_.size()) > universe_) {
    throw ArgumentError("selection size must lie in [1, " + std::to_string(universe_) + "]");
  }
  std::vector<bool> seen(static_cast<std::size_t>(universe_) + 1, false);
  for (int j : ranked_) {
    if (j < 1 || j > universe_) {
      throw ArgumentError("selected index " + std::to_string(j) + " outside 1.." +
                          std::to_string(universe_));
    }
    if (seen[static_cast<std::size_t>(j)]) {
      throw ArgumentError("selected index " + std::to_string(j) + " appears twice");
    }
    seen[static_cast<std::size_t>(j)] = true;
  }
}

bool TopKSet::contains(int index) const {
  return std::find(ranked_.begin(), ranked_.end(), index) != ranked_.end();
}

TopKSet TopKSet::prefix(int length) const {
  if (length < 1 || length > k()) {
    throw ArgumentError("prefix length " + std::to_string(length) + " outside 1.." +
                        std::to_string(k()));
  }
  return TopKSet(universe_, std::vector<int>(ranked_.begin(), ranked_.begin() + length));
}

TopKSet top_k(const ScoreVector& scores, int k) { return top_k(scores.values(), k); }

TopKSet top_k(std::span<const double> scores, int k) {
  const int size = static_cast<int>(scores.size());
  if (k < 1 || k > size) {
    throw ArgumentError("k = " + std::to_string(k) + " outside 1.." + std::to_string(size));
  }
  for (double s : scores) {
    if (!std::isfinite(s)) throw ArgumentError("scores must be finite");
  }
  std::vector<int> order(static_cast<std::size_t>(size));
  std::iota(order.begin(), order.end(), 1);
  auto before = [&](int a, int b) {
    return ranks_before(scores[static_cast<std::size_t>(a - 1)], a,
                        scores[static_cast<std::size_t>(b - 1)], b);
  };
  std::partial_sort(order.begin(), order.begin() + k, order.end(), before);
  order.resize(static_cast<std::size_t>(k));
  return TopKSet(size, std::move(order));
}

TopKSet full_ranking(const ScoreVector& scores) { return full_ranking(scores.values()); }

TopKSet full_ranking(std::span<const double> scores) {
  return top_k(scores, static_cast<int>(scores.size()));
}

std::vector<int> membership_vector(const TopKSet& set, int size) {
  if (size != set.universe()) {
    throw ArgumentError("membership size " + std::to_string(size) +
                        " does not match selection universe " + std::to_string(set.universe()));
  }
  std::vector<int> out(static_cast<std::size_t>(size), 0);
  for (int j : set.ranked()) out[static_cast<std::size_t>(j - 1)] = 1;
  return out;
}

}  // namespace deferkit
