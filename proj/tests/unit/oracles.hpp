#pragma once

// Reference implementations written independently of the library: direct
// formulas and exhaustive enumeration, no shared helpers.

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace oracle {

// Phi^u_01(s, j) from the textbook definition, no log-sum-exp shift.
inline double phi(std::span<const double> s, std::size_t j, double u) {
  double v = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i != j) v += std::exp(s[i] - s[j]);
  }
  if (u == 1.0) return std::log(1.0 + v);
  return (std::pow(1.0 + v, 1.0 - u) - 1.0) / (1.0 - u);
}

// Minimum-cost size-k subset; among equal totals the lexicographically
// smallest bitmask order wins, so callers compare totals, not members.
struct SubsetResult {
  double total = std::numeric_limits<double>::infinity();
  std::vector<int> members;  // 1-based
};

inline SubsetResult best_subset(std::span<const double> cost, int k) {
  const int n = static_cast<int>(cost.size());
  SubsetResult best;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (__builtin_popcount(mask) != k) continue;
    double total = 0.0;
    std::vector<int> members;
    for (int j = 0; j < n; ++j) {
      if (mask & (1u << j)) {
        total += cost[static_cast<std::size_t>(j)];
        members.push_back(j + 1);
      }
    }
    if (total < best.total) best = {total, members};
  }
  return best;
}

// Central differences of f at x.
inline std::vector<double> numeric_gradient(const std::function<double(std::span<const double>)>& f,
                                            std::vector<double> x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// max_i |a_i - b_i| / max(1, max_i |b_i|)
inline double relative_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0;
  double scale = 1.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return diff / scale;
}

}  // namespace oracle
