#pragma once

#include <string>
#include <utility>
#include <vector>

#include "config.hpp"

namespace deferkit::cli {

// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

// Records what a command read and wrote. Paths are stored as given.
class Manifest {
 public:
  explicit Manifest(const RunConfig& config) : config_(config) {}

  void input(const std::string& path);
  void artifact(const std::string& path);

  // Writes <out>/manifest_<command>.json with sorted keys and returns its path.
  std::string write(const std::string& out_dir) const;

 private:
  const RunConfig& config_;
  std::vector<std::string> inputs_;
  std::vector<std::string> artifacts_;
};

}  // namespace deferkit::cli
