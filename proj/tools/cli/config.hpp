#pragma once

// Run configuration: a flat JSON object of typed keys, resolved from command
// defaults, an optional --config file (plain object or a previous manifest),
// DEFERKIT_SEED, and key=value overrides, in that order.

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace deferkit::cli {

class RunConfig {
 public:
  RunConfig(std::string command, nlohmann::json defaults);

  // Keys must already exist in the defaults; values are coerced to the
  // default's type. Throws ConfigError naming the key otherwise.
  void merge_file(const std::string& path);
  void merge_env_seed();
  void set_from_text(const std::string& key, const std::string& text);
  // Accepts "key=value", "--key=value" and "--key" (booleans only).
  void apply_override(const std::string& arg);

  const std::string& command() const { return command_; }
  const nlohmann::json& values() const { return values_; }

  double number(const std::string& key) const;
  int integer(const std::string& key) const;
  std::uint64_t seed() const;
  bool flag(const std::string& key) const;
  std::string text(const std::string& key) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<std::string> texts(const std::string& key) const;

 private:
  const nlohmann::json& at(const std::string& key) const;
  void assign(const std::string& key, const nlohmann::json& value);

  std::string command_;
  nlohmann::json values_;
};

}  // namespace deferkit::cli
