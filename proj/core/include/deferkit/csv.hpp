#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace deferkit::csv {

// Minimal reader for the numeric, unquoted CSV files used here.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based file line of each row

  // Index of a header column, or nullopt.
  std::optional<std::size_t> column(std::string_view name) const;
};

Table read(const std::string& path);

std::vector<std::string> split(std::string_view line);

// Shortest round-trip representation.
std::string format(double value);

std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);

}  // namespace deferkit::csv
