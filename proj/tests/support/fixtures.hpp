#pragma once

// Hand-written matrices shared by tests, kept separate from the library's
// built-in constructors so that those can be checked against them.

#include <cmath>
#include <vector>

#include "qctx/linalg.hpp"

namespace qctx::fixtures {

inline ComplexMatrix abc_a() { return ComplexMatrix::real(3, {-1, 0, 0, 0, 1, 0, 0, 0, 1}); }
inline ComplexMatrix abc_b() { return ComplexMatrix::real(3, {1, 0, 0, 0, 0, 1, 0, 1, 0}); }
inline ComplexMatrix abc_c() { return ComplexMatrix::real(3, {1, 0, 0, 0, 1, 0, 0, 0, -1}); }

inline ComplexMatrix abc_rho(double p) {
  const double r = (1.0 - p) / 2.0;
  return ComplexMatrix::real(3, {p, 0, 0, 0, r, 0, 0, 0, r});
}

inline ComplexMatrix diag3(double a, double b, double c) {
  return ComplexMatrix::real(3, {a, 0, 0, 0, b, 0, 0, 0, c});
}

inline ComplexMatrix pauli_z() { return ComplexMatrix::real(2, {1, 0, 0, -1}); }
inline ComplexMatrix pauli_x() { return ComplexMatrix::real(2, {0, 1, 1, 0}); }

// Deviation of an actual context table from the expected values, entrywise.
inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = a.size() == b.size() ? 0.0 : INFINITY;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace qctx::fixtures
