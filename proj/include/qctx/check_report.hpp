#pragma once

#include <algorithm>
#include <string>
#include <vector>

namespace qctx {

struct Check {
  std::string name;
  bool passed = false;
  double residual = 0.0;

  friend bool operator==(const Check&, const Check&) = default;
};

// Ordered list of named pass/fail checks with their measured residuals.
struct CheckReport {
  std::vector<Check> checks;

  void add(std::string name, double residual, double threshold) {
    checks.push_back({std::move(name), residual <= threshold, residual});
  }

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
  }

  double max_residual() const {
    double r = 0.0;
    for (const Check& c : checks) r = std::max(r, c.residual);
    return r;
  }

  const Check* find(const std::string& name) const {
    auto it = std::find_if(checks.begin(), checks.end(),
                           [&](const Check& c) { return c.name == name; });
    return it == checks.end() ? nullptr : &*it;
  }

  friend bool operator==(const CheckReport&, const CheckReport&) = default;
};

}  // namespace qctx
