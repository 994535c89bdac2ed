#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "deferkit/bayes.hpp"
#include "deferkit/error.hpp"
#include "deferkit/random.hpp"
#include "oracles.hpp"

using namespace deferkit;

namespace {

std::vector<int> ranked(const TopKSet& s) { return {s.ranked().begin(), s.ranked().end()}; }

DiscreteConditional binary(double p1) {
  return DiscreteConditional({ClassId{1}, ClassId{2}}, {p1, 1.0 - p1});
}

std::vector<double> uniform_vector(Rng& rng, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (double& x : v) x = rng.uniform();
  return v;
}

}  // namespace

TEST(DiscreteConditional, Validation) {
  EXPECT_NO_THROW(binary(0.3));
  EXPECT_THROW(DiscreteConditional({ClassId{1}, ClassId{2}}, {0.6, 0.6}), ArgumentError);
  EXPECT_THROW(DiscreteConditional({ClassId{1}, ClassId{2}}, {1.1, -0.1}), ArgumentError);
  EXPECT_THROW(DiscreteConditional({ClassId{1}}, {0.5, 0.5}), ArgumentError);
}

TEST(ExpectedCosts, Examples) {
  const std::vector<double> no_experts;
  const auto set = EntitySet::one_stage(2, no_experts);
  const std::vector<Output> row{ClassId{1}, ClassId{2}};
  EXPECT_EQ(expected_costs(set, row, binary(1.0), Penalty::ZeroOne).values[0], 0.0);
  EXPECT_NEAR(expected_costs(set, row, binary(0.8), Penalty::ZeroOne).values[1], 0.8, 1e-15);

  const std::vector<double> abstain_fee{0.25};
  const auto with_abstain = EntitySet::one_stage(2, abstain_fee, 1.0, 0.0);
  const std::vector<Output> row3{ClassId{1}, ClassId{2}, ClassId{1}};
  for (double p : {0.0, 0.3, 1.0}) {
    EXPECT_EQ(expected_costs(with_abstain, row3, binary(p), Penalty::ZeroOne).values[2], 0.25);
  }
}

TEST(ExpectedCosts, AtLeastFeeAndMatchesDirectSum) {
  Rng rng(51);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(4));
    const int experts = static_cast<int>(rng.below(4));
    const auto fees = uniform_vector(rng, experts);
    const auto set = EntitySet::one_stage(n, fees);
    std::vector<Output> row;
    for (int c = 1; c <= n; ++c) row.emplace_back(ClassId{c});
    for (int e = 0; e < experts; ++e) row.emplace_back(ClassId{1 + static_cast<int>(rng.below(n))});
    auto probs = uniform_vector(rng, n);
    const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    for (double& p : probs) p /= total;
    std::vector<Output> support;
    for (int c = 1; c <= n; ++c) support.emplace_back(ClassId{c});
    const DiscreteConditional cond(support, probs);
    const auto mu = expected_costs(set, row, cond, Penalty::ZeroOne).values;
    for (int j = 0; j < set.size(); ++j) {
      const int says = std::get<ClassId>(row[static_cast<std::size_t>(j)]).value;
      const double fee = set.entities()[static_cast<std::size_t>(j)].beta;
      EXPECT_NEAR(mu[static_cast<std::size_t>(j)],
                  1.0 - probs[static_cast<std::size_t>(says - 1)] + fee, 1e-12);
      EXPECT_GE(mu[static_cast<std::size_t>(j)], fee);
    }
  }
}

TEST(BayesTopK, Examples) {
  const std::vector<double> mu{0.3, 0.1, 0.5, 0.2};
  EXPECT_EQ(ranked(bayes_top_k(mu, 2)), (std::vector<int>{2, 4}));
  EXPECT_EQ(ranked(bayes_top_k(mu, 1)), (std::vector<int>{2}));
  EXPECT_EQ(ranked(bayes_top_k(mu, 4)), (std::vector<int>{2, 4, 1, 3}));
  EXPECT_THROW(bayes_top_k(mu, 0), ArgumentError);
  EXPECT_THROW(bayes_top_k(mu, 5), ArgumentError);
}

TEST(BayesTopK, MatchesExhaustiveSubsetSearch) {
  Rng rng(52);
  for (int trial = 0; trial < 400; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(8));
    auto mu = uniform_vector(rng, n);
    if (trial % 4 == 0) {
      for (double& m : mu) m = std::round(m * 4.0) / 4.0;  // force ties
    }
    for (int k = 1; k <= n; ++k) {
      const auto chosen = bayes_top_k(mu, k);
      double total = 0.0;
      for (int j : chosen.ranked()) total += mu[static_cast<std::size_t>(j - 1)];
      const auto best = oracle::best_subset(mu, k);
      EXPECT_NEAR(total, best.total, 1e-12);
      if (trial % 4 != 0) {
        auto members = ranked(chosen);
        std::sort(members.begin(), members.end());
        EXPECT_EQ(members, best.members);
      }
    }
  }
}

TEST(BayesTopK, PrefixStructure) {
  Rng rng(53);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(7));
    auto mu = uniform_vector(rng, n);
    for (double& m : mu) m = std::round(m * 3.0) / 3.0;
    for (int k = 1; k < n; ++k) {
      const auto small = ranked(bayes_top_k(mu, k));
      const auto large = ranked(bayes_top_k(mu, k + 1));
      EXPECT_TRUE(std::equal(small.begin(), small.end(), large.begin()));
    }
  }
}

TEST(EmpiricalOracle, PicksCheapestRealizedCosts) {
  const std::vector<double> realized{1.0, 0.05, 0.0, 1.03};
  EXPECT_EQ(ranked(empirical_oracle_top_k(realized, 2)), (std::vector<int>{3, 2}));
}

TEST(ChowRule, Examples) {
  const std::vector<double> p{0.8, 0.2};
  EXPECT_EQ(chow_rule(p, 0.25), ChowDecision::predict(1));
  EXPECT_EQ(chow_rule(p, 0.15), ChowDecision::reject());
  const std::vector<double> certain{1.0, 0.0};
  for (double lambda : {1e-6, 0.1, 0.9}) {
    EXPECT_EQ(chow_rule(certain, lambda), ChowDecision::predict(1));
  }
}

TEST(ChowRule, AgreesWithThresholdRule) {
  Rng rng(54);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(5));
    auto p = uniform_vector(rng, n);
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& v : p) v /= total;
    const auto best = std::max_element(p.begin(), p.end());
    const int label = static_cast<int>(best - p.begin()) + 1;
    for (int step = 1; step <= 20; ++step) {
      const double lambda = 0.05 * step;
      const auto decision = chow_rule(p, lambda);
      // Tie at exactly 1 - p* = lambda: the label entity has the smaller index.
      if (1.0 - *best <= lambda) {
        EXPECT_EQ(decision, ChowDecision::predict(label)) << lambda;
      } else {
        EXPECT_EQ(decision, ChowDecision::reject()) << lambda;
      }
    }
  }
}

TEST(Gamma, Examples) {
  EXPECT_NEAR(gamma(CompSumParam::mae(), 0.2, 4), 0.05, 1e-15);
  EXPECT_EQ(gamma(CompSumParam::sum_exponential(), 0.0, 4), 0.0);
  EXPECT_NEAR(gamma(CompSumParam::logistic(), 0.5, 4), 0.75 * std::log(1.5) + 0.25 * std::log(0.5),
              1e-15);
  EXPECT_NEAR(gamma(CompSumParam::logistic(), 0.5, 4), 0.130812, 1e-6);
}

TEST(Gamma, DomainErrors) {
  EXPECT_THROW(gamma(CompSumParam::logistic(), 1.0, 4), DomainError);
  EXPECT_THROW(gamma(CompSumParam::sum_exponential(), -0.1, 4), DomainError);
  EXPECT_THROW(gamma(CompSumParam(0.5), 0.3, 4), DomainError);
  EXPECT_THROW(gamma(CompSumParam(1.5), 0.3, 4), DomainError);
  GammaOptions experimental;
  experimental.allow_experimental = true;
  EXPECT_NO_THROW(gamma(CompSumParam(0.5), 0.3, 4, experimental));
}

TEST(Gamma, MonotoneFromZeroAndInverts) {
  for (double u : {0.0, 1.0, 2.0}) {
    const CompSumParam param(u);
    for (int card : {2, 4, 9}) {
      EXPECT_EQ(gamma(param, 0.0, card), 0.0);
      double prev = 0.0;
      for (int i = 1; i < 1000; ++i) {
        const double v = i / 1000.0;
        const double g = gamma(param, v, card);
        EXPECT_GE(g, prev);
        prev = g;
        EXPECT_NEAR(gamma_inverse(param, g, card), v, 1e-8) << "u=" << u << " v=" << v;
      }
      EXPECT_EQ(gamma_inverse(param, 0.0, card), 0.0);
    }
  }
}

TEST(Gamma, InverseCapsAtOne) {
  EXPECT_EQ(gamma_inverse(CompSumParam::logistic(), 5.0, 4), 1.0);
  EXPECT_EQ(gamma_inverse(CompSumParam::sum_exponential(), 1.0, 4), 1.0);
}

namespace {

FiniteProblem random_problem(Rng& rng, int points, int size) {
  FiniteProblem problem;
  problem.x_probs = uniform_vector(rng, points);
  const double total = std::accumulate(problem.x_probs.begin(), problem.x_probs.end(), 0.0);
  for (double& p : problem.x_probs) p /= total;
  for (int i = 0; i < points; ++i) problem.expected_costs.push_back(uniform_vector(rng, size));
  return problem;
}

std::vector<ScoreVector> random_policy(Rng& rng, int points, int size) {
  std::vector<ScoreVector> policy;
  for (int i = 0; i < points; ++i) {
    std::vector<double> s(static_cast<std::size_t>(size));
    for (double& v : s) v = rng.normal();
    policy.emplace_back(s);
  }
  return policy;
}

}  // namespace

TEST(SurrogateInfimum, BelowAnyScoreVector) {
  Rng rng(55);
  for (double u : {0.0, 1.0, 2.0}) {
    for (int trial = 0; trial < 200; ++trial) {
      const int n = 2 + static_cast<int>(rng.below(6));
      const auto w = uniform_vector(rng, n);
      const double inf = surrogate_infimum(w, CompSumParam(u));
      std::vector<double> s(w.size());
      for (double& v : s) v = 3.0 * rng.normal();
      EXPECT_LE(inf, weighted_comp_sum(s, w, CompSumParam(u)) + 1e-12);
    }
  }
}

TEST(SurrogateInfimum, LogisticAttainedAtLogWeights) {
  const std::vector<double> w{0.2, 0.5, 0.3};
  std::vector<double> s(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) s[j] = std::log(w[j]);
  EXPECT_NEAR(surrogate_infimum(w, CompSumParam::logistic()),
              weighted_comp_sum(s, w, CompSumParam::logistic()), 1e-12);
}

TEST(ConsistencyBound, BayesPolicyHasZeroExcess) {
  Rng rng(56);
  const auto problem = random_problem(rng, 3, 4);
  const auto policy = bayes_policy_scores(problem);
  for (double u : {0.0, 1.0, 2.0}) {
    for (int k = 1; k <= 4; ++k) {
      const auto report = check_consistency_bound(problem, policy, k, CompSumParam(u));
      EXPECT_EQ(report.excess_true, 0.0);
      EXPECT_TRUE(report.holds);
    }
  }
}

TEST(ConsistencyBound, ExcessRisksMatchDirectComputation) {
  Rng rng(57);
  for (int trial = 0; trial < 50; ++trial) {
    const auto problem = random_problem(rng, 3, 4);
    const auto policy = random_policy(rng, 3, 4);
    for (int k = 1; k <= 4; ++k) {
      double risk = 0.0;
      double bayes = 0.0;
      double sur = 0.0;
      double sur_inf = 0.0;
      double mean_total = 0.0;
      for (int x = 0; x < 3; ++x) {
        const auto& mu = problem.expected_costs[static_cast<std::size_t>(x)];
        const double px = problem.x_probs[static_cast<std::size_t>(x)];
        const auto s = policy[static_cast<std::size_t>(x)].values();
        std::vector<std::size_t> order(4);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
        for (int i = 0; i < k; ++i) risk += px * mu[order[static_cast<std::size_t>(i)]];
        bayes += px * oracle::best_subset(mu, k).total;
        const double total = std::accumulate(mu.begin(), mu.end(), 0.0);
        mean_total += px * total;
        std::vector<double> w(4);
        for (std::size_t j = 0; j < 4; ++j) {
          w[j] = total - mu[j];
          sur += px * w[j] * oracle::phi(s, j, 1.0);
        }
        // optimum of sum_j w_j (-log p_j) over the simplex is p = w / W
        const double big_w = std::accumulate(w.begin(), w.end(), 0.0);
        for (double wj : w) sur_inf -= px * wj * std::log(wj / big_w);
      }
      const auto report = check_consistency_bound(problem, policy, k, CompSumParam::logistic());
      EXPECT_NEAR(report.excess_true, risk - bayes, 1e-12);
      EXPECT_NEAR(report.excess_surrogate, sur - sur_inf, 1e-10);
      EXPECT_NEAR(report.S, 3.0 * mean_total, 1e-12);
    }
  }
}

TEST(ConsistencyBound, HoldsForRandomPolicies) {
  Rng rng(58);
  for (int trial = 0; trial < 200; ++trial) {
    const auto problem = random_problem(rng, 3, 4);
    const auto policy = random_policy(rng, 3, 4);
    for (double u : {0.0, 1.0, 2.0}) {
      for (int k = 1; k <= 4; ++k) {
        const auto report = check_consistency_bound(problem, policy, k, CompSumParam(u));
        EXPECT_TRUE(report.holds) << "u=" << u << " k=" << k << " excess=" << report.excess_true
                                  << " bound=" << report.bound;
      }
    }
  }
}

TEST(ConsistencyBound, ZeroSurrogateExcessGivesZeroBound) {
  Rng rng(59);
  const auto problem = random_problem(rng, 3, 4);
  const auto report =
      check_consistency_bound(problem, bayes_policy_scores(problem), 2, CompSumParam::mae());
  EXPECT_GE(report.excess_surrogate, 0.0);
  if (report.excess_surrogate == 0.0) EXPECT_EQ(report.bound, 0.0);
}

TEST(ConsistencyBound, FaultInjectionIsDetected) {
  Rng rng(60);
  int caught = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto problem = random_problem(rng, 3, 4);
    const auto policy = random_policy(rng, 3, 4);
    BoundCheckOptions broken;
    broken.bound_scale = 0.0;
    const auto report = check_consistency_bound(problem, policy, 1, CompSumParam::logistic(), broken);
    if (report.excess_true > 1e-9) {
      EXPECT_FALSE(report.holds);
      ++caught;
    }
  }
  EXPECT_GT(caught, 0);
}

TEST(FiniteProblem, Validation) {
  FiniteProblem bad;
  bad.x_probs = {0.5, 0.6};
  bad.expected_costs = {{0.1, 0.2}, {0.3, 0.4}};
  EXPECT_THROW(bad.validate(), ArgumentError);
  bad.x_probs = {0.5, 0.5};
  bad.expected_costs = {{0.1, 0.2}, {0.3, std::nan("")}};
  EXPECT_ANY_THROW(bad.validate());
}
