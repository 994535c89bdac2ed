#pragma once

#include <stdexcept>
#include <string>

namespace deferkit {

// Invalid argument to a library call (bad k, length mismatch, out-of-range u).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A value lies outside the mathematical domain of a function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Lookup of a missing key (example id, entity index).
class LookupError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Output-space tag mismatch, e.g. a class id handed to a regression penalty.
class OutputKindError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed configuration or input file.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field.empty() ? what : field + ": " + what),
        field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Tabular ingestion failures, one type per cause.
class MissingColumnError : public ConfigError {
 public:
  explicit MissingColumnError(const std::string& column)
      : ConfigError("columns", "missing column '" + column + "'") {}
};

class NonNumericCellError : public ConfigError {
 public:
  NonNumericCellError(std::size_t line, const std::string& column, const std::string& cell)
      : ConfigError("data", "line " + std::to_string(line) + ", column '" + column +
                                "': non-numeric cell '" + cell + "'") {}
};

class EmptyFileError : public ConfigError {
 public:
  explicit EmptyFileError(const std::string& path) : ConfigError("path", path + " has no data rows") {}
};

// NaN or exploding loss during training.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace deferkit
