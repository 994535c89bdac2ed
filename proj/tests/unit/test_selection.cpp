#include <gtest/gtest.h>

#include <algorithm>
#include <limits>

#include "deferkit/error.hpp"
#include "deferkit/random.hpp"
#include "deferkit/selection.hpp"

using namespace deferkit;

namespace {

std::vector<int> ranked(const TopKSet& s) { return {s.ranked().begin(), s.ranked().end()}; }

std::vector<double> random_scores(Rng& rng, int n, bool with_ties) {
  std::vector<double> s(static_cast<std::size_t>(n));
  for (double& v : s) v = with_ties ? static_cast<double>(rng.below(3)) : rng.normal();
  return s;
}

}  // namespace

TEST(TopK, Examples) {
  const std::vector<double> s{0.1, 0.9, 0.5};
  EXPECT_EQ(ranked(top_k(s, 1)), (std::vector<int>{2}));
  EXPECT_EQ(ranked(top_k(s, 2)), (std::vector<int>{2, 3}));
  const std::vector<double> tied{0.7, 0.7, 0.2};
  EXPECT_EQ(ranked(top_k(tied, 2)), (std::vector<int>{1, 2}));
}

TEST(TopK, RejectsOutOfRangeK) {
  const std::vector<double> s{0.1, 0.9, 0.5};
  EXPECT_THROW(top_k(s, 0), ArgumentError);
  EXPECT_THROW(top_k(s, 4), ArgumentError);
}

TEST(ScoreVector, RejectsNonFiniteScores) {
  EXPECT_THROW(ScoreVector({0.0, std::numeric_limits<double>::quiet_NaN()}), ArgumentError);
  EXPECT_THROW(ScoreVector({std::numeric_limits<double>::infinity()}), ArgumentError);
}

TEST(TopK, PrefixConsistency) {
  Rng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(7));
    const auto s = random_scores(rng, n, trial % 2 == 0);
    const auto full = ranked(full_ranking(s));
    std::vector<int> sorted = full;
    std::sort(sorted.begin(), sorted.end());
    for (int j = 1; j <= n; ++j) EXPECT_EQ(sorted[static_cast<std::size_t>(j - 1)], j);
    for (int k = 1; k <= n; ++k) {
      const auto part = ranked(top_k(s, k));
      EXPECT_TRUE(std::equal(part.begin(), part.end(), full.begin()));
    }
  }
}

TEST(TopK, RankingIsOrderedWithIndexTieBreak) {
  Rng rng(4);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(7));
    const auto s = random_scores(rng, n, true);
    const auto r = ranked(full_ranking(s));
    for (std::size_t i = 1; i < r.size(); ++i) {
      const double a = s[static_cast<std::size_t>(r[i - 1] - 1)];
      const double b = s[static_cast<std::size_t>(r[i] - 1)];
      EXPECT_TRUE(a > b || (a == b && r[i - 1] < r[i]));
    }
  }
}

TEST(TopK, PermutationEquivariantWithoutTies) {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(7));
    const auto s = random_scores(rng, n, false);
    const auto perm = rng.permutation(static_cast<std::size_t>(n));  // new position of entity j
    std::vector<double> moved(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) moved[perm[j]] = s[j];
    const int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    auto original = ranked(top_k(s, k));
    for (int& j : original) j = static_cast<int>(perm[static_cast<std::size_t>(j - 1)]) + 1;
    EXPECT_EQ(original, ranked(top_k(moved, k)));
  }
}

TEST(TopK, InvariantUnderConstantShift) {
  Rng rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(7));
    const auto s = random_scores(rng, n, trial % 3 == 0);
    auto shifted = s;
    const double c = static_cast<double>(rng.below(64)) - 32.0;  // exact in binary
    for (double& v : shifted) v += c;
    for (int k = 1; k <= n; ++k) EXPECT_EQ(ranked(top_k(s, k)), ranked(top_k(shifted, k)));
  }
}

TEST(MembershipVector, Examples) {
  EXPECT_EQ(membership_vector(TopKSet(4, {3, 1}), 4), (std::vector<int>{1, 0, 1, 0}));
  EXPECT_EQ(membership_vector(TopKSet(2, {2}), 2), (std::vector<int>{0, 1}));
  EXPECT_EQ(membership_vector(TopKSet(3, {1, 2, 3}), 3), (std::vector<int>{1, 1, 1}));
  EXPECT_THROW(membership_vector(TopKSet(3, {1}), 4), ArgumentError);
}

TEST(TopKSet, RejectsInvalidSelections) {
  EXPECT_THROW(TopKSet(3, {}), ArgumentError);
  EXPECT_THROW(TopKSet(3, {1, 1}), ArgumentError);
  EXPECT_THROW(TopKSet(3, {4}), ArgumentError);
  EXPECT_THROW(TopKSet(2, {1, 2, 3}), ArgumentError);
}
