#include "config.hpp"

#include <cstdlib>
#include <fstream>

#include "deferkit/csv.hpp"
#include "deferkit/error.hpp"

namespace deferkit::cli {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace

RunConfig::RunConfig(std::string command, nlohmann::json defaults)
    : command_(std::move(command)), values_(std::move(defaults)) {}

const nlohmann::json& RunConfig::at(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(key, "unknown option for " + command_);
  return *it;
}

void RunConfig::assign(const std::string& key, const nlohmann::json& value) {
  const auto& current = at(key);
  const bool ok = (current.is_boolean() && value.is_boolean()) ||
                  (current.is_number_integer() && value.is_number_integer()) ||
                  (current.is_number_float() && value.is_number()) ||
                  (current.is_string() && value.is_string()) ||
                  (current.is_array() && value.is_array());
  if (!ok) throw ConfigError(key, "value " + value.dump() + " has the wrong type");
  if (current.is_number_integer() && value.is_number_integer() && value.get<long long>() < 0 &&
      key == "seed") {
    throw ConfigError(key, "must be >= 0");
  }
  values_[key] = current.is_number_float() ? nlohmann::json(value.get<double>()) : value;
}

void RunConfig::merge_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config", path + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config", path + " must hold a JSON object");
  if (doc.contains("command") && doc.contains("config")) {
    if (doc["command"] != command_) {
      throw ConfigError("config", path + " is a manifest for '" +
                                      doc["command"].get<std::string>() + "'");
    }
    doc = doc["config"];
  }
  for (const auto& [key, value] : doc.items()) assign(key, value);
}

void RunConfig::merge_env_seed() {
  const char* env = std::getenv("DEFERKIT_SEED");
  if (env == nullptr || *env == '\0') return;
  const auto v = csv::parse_int(env);
  if (!v || *v < 0) throw ConfigError("DEFERKIT_SEED", "must be a non-negative integer");
  values_["seed"] = *v;
}

void RunConfig::set_from_text(const std::string& key, const std::string& raw) {
  const auto& current = at(key);
  const std::string text = trim(raw);
  if (current.is_boolean()) {
    if (text == "true" || text == "1") return assign(key, true);
    if (text == "false" || text == "0") return assign(key, false);
    throw ConfigError(key, "expected true or false, got '" + text + "'");
  }
  if (current.is_number_integer()) {
    const auto v = csv::parse_int(text);
    if (!v) throw ConfigError(key, "expected an integer, got '" + text + "'");
    return assign(key, *v);
  }
  if (current.is_number_float()) {
    const auto v = csv::parse_double(text);
    if (!v) throw ConfigError(key, "expected a number, got '" + text + "'");
    return assign(key, *v);
  }
  if (current.is_array()) {
    nlohmann::json list = nlohmann::json::array();
    if (!text.empty()) {
      for (const auto& item : csv::split(text)) {
        const auto v = csv::parse_double(trim(item));
        if (v) {
          list.push_back(*v);
        } else {
          list.push_back(trim(item));
        }
      }
    }
    return assign(key, list);
  }
  assign(key, text);
}

void RunConfig::apply_override(const std::string& arg) {
  const bool dashed = arg.rfind("--", 0) == 0;
  std::string body = dashed ? arg.substr(2) : arg;
  const auto eq = body.find('=');
  std::string key = body.substr(0, eq);
  for (char& c : key) {
    if (c == '-') c = '_';
  }
  if (eq == std::string::npos) {
    if (dashed && at(key).is_boolean()) return assign(key, true);
    throw ConfigError(key, "expected key=value");
  }
  set_from_text(key, body.substr(eq + 1));
}

double RunConfig::number(const std::string& key) const { return at(key).get<double>(); }

int RunConfig::integer(const std::string& key) const { return at(key).get<int>(); }

std::uint64_t RunConfig::seed() const { return at("seed").get<std::uint64_t>(); }

bool RunConfig::flag(const std::string& key) const { return at(key).get<bool>(); }

std::string RunConfig::text(const std::string& key) const { return at(key).get<std::string>(); }

std::vector<double> RunConfig::numbers(const std::string& key) const {
  std::vector<double> out;
  for (const auto& v : at(key)) {
    if (!v.is_number()) throw ConfigError(key, "expected a list of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<std::string> RunConfig::texts(const std::string& key) const {
  std::vector<std::string> out;
  for (const auto& v : at(key)) out.push_back(v.is_string() ? v.get<std::string>() : v.dump());
  return out;
}

}  // namespace deferkit::cli
