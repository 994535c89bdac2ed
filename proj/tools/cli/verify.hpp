#pragma once

// Seeded property suites behind `deferkit verify` and the acceptance runner.
// Each check compares the library against a brute-force or direct oracle.

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace deferkit::cli {

struct VerifyOptions {
  std::uint64_t seed = 0;
  double u = 1.0;      // upper-bound check
  int trials = 10000;  // upper-bound instances; other checks use their own counts
  bool inject_fault = false;
};

struct CheckResult {
  std::string suite;
  std::string name;
  std::size_t trials = 0;
  std::size_t failures = 0;
  nlohmann::json counterexamples = nlohmann::json::array();  // at most 5
  double seconds = 0.0;

  bool passed() const { return failures == 0; }
  void fail(nlohmann::json example);
};

nlohmann::json to_json(const CheckResult& result);

// losses
CheckResult check_upper_bound(const VerifyOptions& options);
CheckResult check_top1_reduction(const VerifyOptions& options, int instances = 1000);
// bayes
CheckResult check_bayes_exhaustive(const VerifyOptions& options, int vectors = 1000);
CheckResult check_chow_grid(const VerifyOptions& options, int grid = 100);
CheckResult check_gamma(const VerifyOptions& options, int points = 1000);
CheckResult check_consistency_bound(const VerifyOptions& options, int policies = 100);
// cascade
CheckResult check_cascade_prefix(const VerifyOptions& options, int pairs = 1000);
CheckResult check_cascade_adaptive(const VerifyOptions& options, int draws = 1000);
CheckResult check_separating_example(const VerifyOptions& options);

const std::vector<std::string>& suite_names();
// Throws ConfigError for an unknown suite name.
std::vector<CheckResult> run_suite(const std::string& suite, const VerifyOptions& options);

}  // namespace deferkit::cli
