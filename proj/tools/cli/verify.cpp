#include "verify.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <numeric>

#include "deferkit/bayes.hpp"
#include "deferkit/cascade.hpp"
#include "deferkit/error.hpp"
#include "deferkit/losses.hpp"
#include "deferkit/random.hpp"
#include "deferkit/selection.hpp"
#include "deferkit/training.hpp"

namespace deferkit::cli {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxExamples = 5;

class Timer {
 public:
  explicit Timer(CheckResult& result) : result_(result), start_(std::chrono::steady_clock::now()) {}
  ~Timer() {
    result_.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  CheckResult& result_;
  std::chrono::steady_clock::time_point start_;
};

CheckResult make(const char* suite, const char* name) {
  CheckResult r;
  r.suite = suite;
  r.name = name;
  return r;
}

std::vector<double> uniforms(Rng& rng, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (double& x : v) x = rng.uniform();
  return v;
}

std::vector<double> normals(Rng& rng, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (double& x : v) x = rng.normal();
  return v;
}

std::vector<int> to_vector(const TopKSet& s) { return {s.ranked().begin(), s.ranked().end()}; }

std::vector<int> sorted(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  return v;
}

// Size-k subset of minimal total cost by enumeration; ties go to the
// lexicographically smallest index set.
std::vector<int> exhaustive_best(const std::vector<double>& mu, int k) {
  const int m = static_cast<int>(mu.size());
  double best = INFINITY;
  std::vector<int> best_set;
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    if (std::popcount(mask) != k) continue;
    double total = 0.0;
    std::vector<int> set;
    for (int j = 0; j < m; ++j) {
      if (mask & (1u << j)) {
        total += mu[static_cast<std::size_t>(j)];
        set.push_back(j + 1);
      }
    }
    if (total < best || (total == best && set < best_set)) {
      best = total;
      best_set = set;
    }
  }
  return best_set;
}

CascadeSpec random_cascade(Rng& rng, int m) {
  CascadeSpec spec;
  spec.order.resize(static_cast<std::size_t>(m));
  std::iota(spec.order.begin(), spec.order.end(), 1);
  rng.shuffle(std::span<int>(spec.order));
  do {
    spec.thresholds = uniforms(rng, m);
    std::sort(spec.thresholds.begin(), spec.thresholds.end());
  } while (std::adjacent_find(spec.thresholds.begin(), spec.thresholds.end()) !=
               spec.thresholds.end() ||
           spec.thresholds.front() <= 0.0);
  return spec;
}

}  // namespace

void CheckResult::fail(json example) {
  ++failures;
  if (counterexamples.size() < kMaxExamples) counterexamples.push_back(std::move(example));
}

json to_json(const CheckResult& r) {
  return {{"suite", r.suite},       {"name", r.name},
          {"passed", r.passed()},   {"trials", r.trials},
          {"failures", r.failures}, {"counterexamples", r.counterexamples},
          {"seconds", r.seconds}};
}

CheckResult check_upper_bound(const VerifyOptions& o) {
  auto r = make("losses", "upper_bound");
  Timer timer(r);
  Rng rng(derive_seed(o.seed, 11));
  const CompSumParam u(o.u);
  for (int t = 0; t < o.trials; ++t) {
    const int m = 2 + static_cast<int>(rng.below(7));
    const auto mu = uniforms(rng, m);
    const ScoreVector scores(normals(rng, m));
    for (int k = 1; k <= m; ++k) {
      ++r.trials;
      const double loss = true_deferral_loss(mu, top_k(scores, k));
      const double rhs = upper_bound_rhs(scores, mu, k, u);
      if (!(loss <= rhs + 1e-9)) {
        r.fail({{"scores", scores.values()}, {"costs", mu}, {"k", k}, {"u", o.u},
                {"loss", loss}, {"bound", rhs}});
      }
    }
  }
  return r;
}

CheckResult check_top1_reduction(const VerifyOptions& o, int instances) {
  auto r = make("losses", "top1_reduction");
  Timer timer(r);
  Rng rng(derive_seed(o.seed, 12));
  for (int t = 0; t < instances; ++t) {
    // One-stage: n labels then J experts with costs c_j.
    const int n = 2 + static_cast<int>(rng.below(5));
    const int experts = 1 + static_cast<int>(rng.below(4));
    const int y = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    const auto c = uniforms(rng, experts);
    std::vector<double> mu(static_cast<std::size_t>(n + experts));
    for (int j = 1; j <= n; ++j) mu[static_cast<std::size_t>(j - 1)] = j == y ? 0.0 : 1.0;
    std::copy(c.begin(), c.end(), mu.begin() + n);
    const auto pick = top_k(normals(rng, n + experts), 1);
    const double lhs = true_deferral_loss(mu, pick);
    const double rhs = one_stage_top1_loss(pick.ranked()[0], y, n, c);
    ++r.trials;
    if (lhs != rhs) r.fail({{"regime", "one_stage"}, {"costs", mu}, {"selected", pick.ranked()[0]}});

    const int m = 2 + static_cast<int>(rng.below(7));
    const auto mu2 = uniforms(rng, m);
    const auto pick2 = top_k(normals(rng, m), 1);
    ++r.trials;
    if (true_deferral_loss(mu2, pick2) != two_stage_top1_loss(pick2.ranked()[0], mu2)) {
      r.fail({{"regime", "two_stage"}, {"costs", mu2}, {"selected", pick2.ranked()[0]}});
    }
  }
  return r;
}

CheckResult check_bayes_exhaustive(const VerifyOptions& o, int vectors) {
  auto r = make("bayes", "bayes_top_k_exhaustive");
  Timer timer(r);
  Rng rng(derive_seed(o.seed, 21));
  for (int t = 0; t < vectors; ++t) {
    const int m = 1 + static_cast<int>(rng.below(8));
    const auto mu = uniforms(rng, m);
    for (int k = 1; k <= m; ++k) {
      ++r.trials;
      const auto got = sorted(to_vector(bayes_top_k(mu, k)));
      const auto want = exhaustive_best(mu, k);
      if (got != want) r.fail({{"costs", mu}, {"k", k}, {"got", got}, {"expected", want}});
    }
  }
  return r;
}

CheckResult check_chow_grid(const VerifyOptions& o, int grid) {
  auto r = make("bayes", "chow_rule_grid");
  Timer timer(r);
  (void)o;
  for (int a = 1; a <= grid; ++a) {
    for (int b = 1; b <= grid; ++b) {
      const double p = static_cast<double>(a) / (grid + 1);
      const double lambda = static_cast<double>(b) / (grid + 1);
      const std::vector<double> posterior{p, 1.0 - p};
      // Augmented entities: label 1, label 2, abstain at fee lambda.
      const std::vector<double> cost{1.0 - p, p, lambda};
      int best = 0;
      for (int j = 1; j < 3; ++j) {
        if (cost[static_cast<std::size_t>(j)] < cost[static_cast<std::size_t>(best)]) best = j;
      }
      const auto want = best == 2 ? ChowDecision::reject() : ChowDecision::predict(best + 1);
      ++r.trials;
      if (chow_rule(posterior, lambda) != want) {
        r.fail({{"p", p}, {"lambda", lambda}, {"expected_abstain", want.abstain}});
      }
    }
  }
  return r;
}

CheckResult check_gamma(const VerifyOptions& o, int points) {
  auto r = make("bayes", "gamma");
  Timer timer(r);
  (void)o;
  for (int m : {2, 5, 8}) {
    for (int i = 0; i < points; ++i) {
      const double v = static_cast<double>(i) / points;
      ++r.trials;
      if (gamma(CompSumParam::mae(), v, m) != v / m) {
        r.fail({{"u", 2}, {"v", v}, {"cardinality", m}, {"what", "v/|A|"}});
      }
    }
    for (double u : {0.0, 1.0}) {
      const CompSumParam param(u);
      double previous = gamma(param, 0.0, m);
      ++r.trials;
      if (previous != 0.0) r.fail({{"u", u}, {"cardinality", m}, {"what", "gamma(0) != 0"}});
      for (int i = 1; i < points; ++i) {
        const double v = static_cast<double>(i) / points;
        const double g = gamma(param, v, m);
        ++r.trials;
        if (!(g > previous)) r.fail({{"u", u}, {"v", v}, {"cardinality", m}, {"what", "monotone"}});
        const double back = gamma_inverse(param, g, m);
        ++r.trials;
        if (!(std::abs(back - v) <= 1e-8)) {
          r.fail({{"u", u}, {"v", v}, {"cardinality", m}, {"inverse", back}, {"what", "round trip"}});
        }
        previous = g;
      }
    }
  }
  return r;
}

CheckResult check_consistency_bound(const VerifyOptions& o, int policies) {
  auto r = make("bayes", "consistency_bound");
  Timer timer(r);
  Rng rng(derive_seed(o.seed, 22));
  BoundCheckOptions options;
  if (o.inject_fault) options.bound_scale = 0.0;
  for (int p = 0; p < policies; ++p) {
    FiniteProblem problem;
    const int nx = 1 + static_cast<int>(rng.below(10));
    const int m = 2 + static_cast<int>(rng.below(4));
    problem.x_probs = uniforms(rng, nx);
    const double z = std::accumulate(problem.x_probs.begin(), problem.x_probs.end(), 0.0);
    for (double& q : problem.x_probs) q /= z;
    for (int x = 0; x < nx; ++x) problem.expected_costs.push_back(uniforms(rng, m));
    std::vector<ScoreVector> policy;
    for (int x = 0; x < nx; ++x) policy.emplace_back(normals(rng, m));
    for (int k = 1; k <= std::min(3, m); ++k) {
      for (double u : {0.0, 1.0, 2.0}) {
        ++r.trials;
        const auto report = check_consistency_bound(problem, policy, k, CompSumParam(u), options);
        if (!report.holds) {
          r.fail({{"k", k}, {"u", u}, {"n_points", nx}, {"n_entities", m},
                  {"excess_true", report.excess_true}, {"excess_surrogate", report.excess_surrogate},
                  {"bound", report.bound}});
        }
      }
    }
  }
  return r;
}

CheckResult check_cascade_prefix(const VerifyOptions& o, int pairs) {
  auto r = make("cascade", "prefix_embedding");
  Timer timer(r);
  Rng rng(derive_seed(o.seed, 31));
  for (int t = 0; t < pairs; ++t) {
    const int m = 1 + static_cast<int>(rng.below(8));
    const auto spec = random_cascade(rng, m);
    const int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
    const auto got = to_vector(top_k(cascade_scores(spec, k), k));
    const std::vector<int> want(spec.order.begin(), spec.order.begin() + k);
    ++r.trials;
    if (got != want) r.fail({{"order", spec.order}, {"k", k}, {"got", got}});
  }
  return r;
}

CheckResult check_cascade_adaptive(const VerifyOptions& o, int draws) {
  auto r = make("cascade", "adaptive_simulation");
  Timer timer(r);
  Rng rng(derive_seed(o.seed, 32));
  for (int t = 0; t < draws; ++t) {
    const int m = 1 + static_cast<int>(rng.below(8));
    const auto spec = random_cascade(rng, m);
    const auto conf = uniforms(rng, m);
    // Run the stages in order and stop at the first confident one.
    int stop = m;
    std::vector<int> consulted;
    for (int i = 0; i < m; ++i) {
      const int entity = spec.order[static_cast<std::size_t>(i)];
      consulted.push_back(entity);
      if (conf[static_cast<std::size_t>(entity - 1)] >= spec.thresholds[static_cast<std::size_t>(i)]) {
        stop = i + 1;
        break;
      }
    }
    const auto policy = adaptive_cascade(spec, conf);
    const int k = adaptive_k(policy.cardinality_scores);
    ++r.trials;
    if (policy.k_hat != stop || k != stop || to_vector(top_k(policy.scores, k)) != consulted) {
      r.fail({{"order", spec.order}, {"thresholds", spec.thresholds}, {"confidence", conf},
              {"expected_stop", stop}, {"k_hat", policy.k_hat}});
    }
  }
  return r;
}

CheckResult check_separating_example(const VerifyOptions& o) {
  auto r = make("cascade", "separating_example");
  Timer timer(r);
  (void)o;
  ++r.trials;
  if (!separating_example_check()) r.fail({{"what", "a fixed order realized both selections"}});
  return r;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"losses", "bayes", "cascade"};
  return names;
}

std::vector<CheckResult> run_suite(const std::string& suite, const VerifyOptions& o) {
  if (suite == "losses") return {check_upper_bound(o), check_top1_reduction(o)};
  if (suite == "bayes") {
    return {check_bayes_exhaustive(o), check_chow_grid(o), check_gamma(o),
            check_consistency_bound(o)};
  }
  if (suite == "cascade") {
    return {check_cascade_prefix(o), check_cascade_adaptive(o), check_separating_example(o)};
  }
  throw ConfigError("checks", "unknown suite " + suite + " (losses, bayes, cascade)");
}

}  // namespace deferkit::cli
