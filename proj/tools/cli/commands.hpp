#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "config.hpp"

namespace deferkit::cli {

// Default key sets, one per subcommand.
nlohmann::json gen_defaults();
nlohmann::json train_policy_defaults();
nlohmann::json train_cardinality_defaults();
nlohmann::json eval_defaults();
nlohmann::json sweep_defaults();
nlohmann::json verify_defaults();

// Each returns the process exit code. Library errors propagate as exceptions.
int run_gen(const RunConfig& config);
int run_train_policy(const RunConfig& config);
int run_train_cardinality(const RunConfig& config);
int run_eval(const RunConfig& config);
int run_sweep(const RunConfig& config);
int run_verify(const RunConfig& config);

}  // namespace deferkit::cli
