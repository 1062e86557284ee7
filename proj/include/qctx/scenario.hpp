#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "qctx/errors.hpp"
#include "qctx/linalg.hpp"
#include "qctx/spectral.hpp"

namespace qctx {

inline constexpr double kDefaultScenarioTol = 1e-9;

inline DensityOperator validate_density(const ComplexMatrix& m, double tol = kDefaultScenarioTol) {
  if (m.dim() == 0) throw DimensionMismatch("density operator has dimension 0");
  const double herm = hermitian_residual(m);
  if (herm > tol * std::max(1.0, m.frobenius_norm())) {
    throw NotHermitian("density operator is not Hermitian (residual " + std::to_string(herm) +
                       ")");
  }
  const PDI pdi = spectral_decompose(m, std::min(tol, kDefaultSpectralTol));
  const double min_eig = pdi.blocks.back().eigenvalue();
  if (min_eig < -tol) throw NotPositive(min_eig);
  const double tr = m.trace().real();
  if (std::abs(tr - 1.0) > tol) throw BadTrace(tr);
  return DensityOperator(m);
}

struct Observable {
  std::string label;
  ComplexMatrix matrix;
};

// A collection of observables on one Hilbert space together with a state.
struct Scenario {
  std::string name;
  std::size_t dim = 0;
  std::vector<Observable> observables;
  DensityOperator rho;

  std::size_t index_of(const std::string& label) const {
    for (std::size_t i = 0; i < observables.size(); ++i)
      if (observables[i].label == label) return i;
    throw ValidationError(label, "no such observable");
  }

  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    for (const Observable& o : observables) out.push_back(o.label);
    return out;
  }
};

// Validates every observable and the state; errors carry the offending label.
inline Scenario make_scenario(std::string name, std::vector<Observable> observables,
                              const ComplexMatrix& rho, double tol = kDefaultScenarioTol) {
  const std::size_t dim = rho.dim();
  if (dim == 0) throw ValidationError("dim", "dimension must be positive");
  if (observables.empty()) throw ValidationError("observables", "at least one observable required");
  std::unordered_set<std::string> seen;
  for (const Observable& o : observables) {
    if (o.label.empty()) throw ValidationError("observables", "empty label");
    if (!seen.insert(o.label).second) throw ValidationError(o.label, "duplicate label");
    if (o.matrix.dim() != dim) {
      throw ValidationError(o.label, "dimension " + std::to_string(o.matrix.dim()) +
                                         " does not match " + std::to_string(dim));
    }
    const double herm = hermitian_residual(o.matrix);
    if (herm > tol * std::max(1.0, o.matrix.frobenius_norm())) {
      throw ValidationError(o.label, "observable is not Hermitian (residual " +
                                         std::to_string(herm) + ")");
    }
  }
  try {
    DensityOperator state = validate_density(rho, tol);
    return Scenario{std::move(name), dim, std::move(observables), std::move(state)};
  } catch (const ValidationError&) {
    throw;
  } catch (const Error& e) {
    throw ValidationError("rho", e.what());
  }
}

// Scenario with a replaced state; observables are reused as-is.
inline Scenario with_state(const Scenario& s, const ComplexMatrix& rho,
                           double tol = kDefaultScenarioTol) {
  if (rho.dim() != s.dim) throw DimensionMismatch("state dimension does not match scenario");
  return Scenario{s.name, s.dim, s.observables, validate_density(rho, tol)};
}

// Three observables on C^3: A = diag(-1,1,1), B and C carrying sigma_x and
// sigma_z in the lower 2x2 block; rho = diag(p, r, r) with r = (1-p)/2.
inline Scenario builtin_abc(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw OutOfRange("p must lie in [0, 1]");
  const double r = (1.0 - p) / 2.0;
  std::vector<Observable> obs{
      {"A", ComplexMatrix::real(3, {-1, 0, 0, 0, 1, 0, 0, 0, 1})},
      {"B", ComplexMatrix::real(3, {1, 0, 0, 0, 0, 1, 0, 1, 0})},
      {"C", ComplexMatrix::real(3, {1, 0, 0, 0, 1, 0, 0, 0, -1})},
  };
  const std::array<double, 3> diag{p, r, r};
  std::ostringstream name;
  name << "abc(p=" << p << ")";
  return make_scenario(name.str(), std::move(obs), ComplexMatrix::diagonal(diag));
}

enum class ChshState { singlet, product00 };

inline constexpr std::array<double, 4> kTsirelsonAngles{0.0, std::numbers::pi / 2,
                                                       3 * std::numbers::pi / 4,
                                                       std::numbers::pi / 4};

// cos(theta) sigma_z + sin(theta) sigma_x
inline ComplexMatrix spin_along(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  return ComplexMatrix::real(2, {c, s, s, -c});
}

// Two qubits; A, A' act on the first, B, B' on the second, with measurement
// directions in the x-z plane.
inline Scenario builtin_chsh(ChshState state,
                             const std::array<double, 4>& angles = kTsirelsonAngles) {
  for (double a : angles)
    if (!std::isfinite(a)) throw OutOfRange("CHSH angles must be finite");
  const ComplexMatrix id = ComplexMatrix::identity(2);
  std::vector<Observable> obs{
      {"A", kron(spin_along(angles[0]), id)},
      {"A'", kron(spin_along(angles[1]), id)},
      {"B", kron(id, spin_along(angles[2]))},
      {"B'", kron(id, spin_along(angles[3]))},
  };
  std::vector<Complex> psi(4);
  if (state == ChshState::singlet) {
    psi[1] = 1.0 / std::numbers::sqrt2;
    psi[2] = -1.0 / std::numbers::sqrt2;
  } else {
    psi[0] = 1.0;
  }
  const std::string name = state == ChshState::singlet ? "chsh(singlet)" : "chsh(product00)";
  return make_scenario(name, std::move(obs), ComplexMatrix::outer(psi));
}

}  // namespace qctx
