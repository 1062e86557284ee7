#pragma once

// Projective decompositions of the identity (PDIs) for Hermitian observables:
// a Jacobi eigensolver, projector algebra, commutation tests and the Born rule.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "qctx/check_report.hpp"
#include "qctx/errors.hpp"
#include "qctx/linalg.hpp"

namespace qctx {

inline constexpr double kDefaultSpectralTol = 1e-8;
inline constexpr double kDefaultCommuteTol = 1e-9;
inline constexpr double kDefaultProbabilityTol = 1e-9;

struct EigenSystem {
  std::vector<double> values;                // descending
  std::vector<std::vector<Complex>> vectors;  // vectors[i] pairs with values[i]
};

// Cyclic Jacobi rotations for a Hermitian matrix. Stops once the off-diagonal
// Frobenius norm is at most 1e-12 * ||m||_F.
inline EigenSystem hermitian_eigen(const ComplexMatrix& m, std::size_t max_sweeps = 100) {
  const std::size_t n = m.dim();
  ComplexMatrix a = m + m.adjoint();
  a *= 0.5;
  ComplexMatrix v = ComplexMatrix::identity(n);
  const double scale = m.frobenius_norm();

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += std::norm(a(i, j));
    return std::sqrt(s);
  };

  bool converged = false;
  for (std::size_t sweep = 0; sweep <= max_sweeps; ++sweep) {
    if (off_norm() <= 1e-12 * scale) {
      converged = true;
      break;
    }
    if (sweep == max_sweeps) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double mag = std::abs(a(p, q));
        if (mag == 0.0) continue;
        const Complex phase = a(p, q) / mag;
        const double tau = (a(q, q).real() - a(p, p).real()) / (2.0 * mag);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        const Complex sp = s * phase;             // J(p,q)
        const Complex sq = -s * std::conj(phase);  // J(q,p)

        // A <- A J, V <- V J
        for (std::size_t k = 0; k < n; ++k) {
          const Complex akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp + sq * akq;
          a(k, q) = sp * akp + c * akq;
          const Complex vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp + sq * vkq;
          v(k, q) = sp * vkp + c * vkq;
        }
        // A <- J^dagger A
        for (std::size_t k = 0; k < n; ++k) {
          const Complex apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk + std::conj(sq) * aqk;
          a(q, k) = std::conj(sp) * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
      }
    }
  }
  if (!converged) throw DidNotConverge("Jacobi eigensolver did not converge");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return a(i, i).real() > a(j, j).real();
  });
  EigenSystem out;
  for (std::size_t idx : order) {
    out.values.push_back(a(idx, idx).real());
    std::vector<Complex> col(n);
    for (std::size_t k = 0; k < n; ++k) col[k] = v(k, idx);
    out.vectors.push_back(std::move(col));
  }
  return out;
}

struct Projector {
  ComplexMatrix matrix;
  std::size_t rank = 0;

  // Rank is read off the (rounded) trace.
  static Projector from_matrix(ComplexMatrix m) {
    const double tr = m.trace().real();
    return {std::move(m), static_cast<std::size_t>(std::max(0.0, std::round(tr)))};
  }
};

// One block of a PDI. `outcome` holds a single eigenvalue for the PDI of one
// observable, or one eigenvalue per factor for a common refinement.
struct PdiBlock {
  std::vector<double> outcome;
  Projector projector;

  double eigenvalue() const { return outcome.front(); }
};

// Projective decomposition of the identity, blocks in descending outcome order.
struct PDI {
  std::size_t dim = 0;
  std::vector<PdiBlock> blocks;

  std::vector<double> eigenvalues() const {
    std::vector<double> out;
    for (const PdiBlock& b : blocks) out.push_back(b.eigenvalue());
    return out;
  }

  // sum_j a_j P_j (first outcome coordinate only)
  ComplexMatrix reconstruct() const {
    ComplexMatrix out(dim);
    for (const PdiBlock& b : blocks) out += b.projector.matrix * Complex(b.eigenvalue());
    return out;
  }
};

class DensityOperator;
DensityOperator validate_density(const ComplexMatrix& m, double tol);

// Hermitian, positive semidefinite, unit trace. Only obtainable through
// validate_density().
class DensityOperator {
 public:
  const ComplexMatrix& matrix() const noexcept { return matrix_; }
  std::size_t dim() const noexcept { return matrix_.dim(); }

 private:
  explicit DensityOperator(ComplexMatrix m) : matrix_(std::move(m)) {}
  friend DensityOperator validate_density(const ComplexMatrix& m, double tol);

  ComplexMatrix matrix_;
};

inline PDI spectral_decompose(const ComplexMatrix& m, double tol = kDefaultSpectralTol) {
  const double norm = m.frobenius_norm();
  const double herm = hermitian_residual(m);
  if (herm > tol * std::max(1.0, norm)) {
    throw NotHermitian("matrix is not Hermitian (residual " + std::to_string(herm) + ")");
  }
  const EigenSystem eig = hermitian_eigen(m);
  const double gap = tol * norm;

  PDI pdi;
  pdi.dim = m.dim();
  std::size_t i = 0;
  while (i < eig.values.size()) {
    std::size_t j = i + 1;
    while (j < eig.values.size() && eig.values[j - 1] - eig.values[j] <= gap) ++j;
    double mean = 0.0;
    ComplexMatrix proj(m.dim());
    for (std::size_t k = i; k < j; ++k) {
      mean += eig.values[k];
      proj += ComplexMatrix::outer(eig.vectors[k]);
    }
    mean /= static_cast<double>(j - i);
    pdi.blocks.push_back({{mean}, Projector{std::move(proj), j - i}});
    i = j;
  }
  return pdi;
}

inline bool commutes(const ComplexMatrix& m, const ComplexMatrix& n,
                     double tol = kDefaultCommuteTol) {
  if (m.dim() != n.dim()) {
    throw DimensionMismatch("commutes: dimension " + std::to_string(m.dim()) + " vs " +
                            std::to_string(n.dim()));
  }
  const double comm = (m * n - n * m).frobenius_norm();
  return comm <= tol * m.frobenius_norm() * n.frobenius_norm();
}

namespace detail {

inline bool outcome_descending(const std::vector<double>& a, const std::vector<double>& b) {
  return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace detail

// Common refinement of two compatible PDIs: every nonzero product P_j Q_k,
// tagged with the concatenated outcome and sorted in canonical descending order.
inline PDI common_refinement(const PDI& a, const PDI& b, double tol = kDefaultCommuteTol) {
  if (a.dim != b.dim) {
    throw DimensionMismatch("common_refinement: dimension " + std::to_string(a.dim) +
                            " vs " + std::to_string(b.dim));
  }
  PDI out;
  out.dim = a.dim;
  for (const PdiBlock& p : a.blocks) {
    for (const PdiBlock& q : b.blocks) {
      if (!commutes(p.projector.matrix, q.projector.matrix, tol)) {
        throw Incompatible("projectors of the two PDIs do not commute");
      }
      ComplexMatrix prod = symmetrized_product(p.projector.matrix, q.projector.matrix);
      if (prod.frobenius_norm() <= tol) continue;
      std::vector<double> outcome = p.outcome;
      outcome.insert(outcome.end(), q.outcome.begin(), q.outcome.end());
      out.blocks.push_back({std::move(outcome), Projector::from_matrix(std::move(prod))});
    }
  }
  std::stable_sort(out.blocks.begin(), out.blocks.end(),
                   [](const PdiBlock& x, const PdiBlock& y) {
                     return detail::outcome_descending(x.outcome, y.outcome);
                   });
  return out;
}

// Checks each PDI invariant and reports the worst residual seen for it.
inline CheckReport validate_pdi(const PDI& p, double tol = kDefaultSpectralTol) {
  const double dim = static_cast<double>(p.dim);
  double herm = 0.0, idem = 0.0, trace_gap = 0.0, ortho = 0.0;
  bool ordered = true;
  std::size_t rank_sum = 0;
  ComplexMatrix total(p.dim);
  for (std::size_t j = 0; j < p.blocks.size(); ++j) {
    const ComplexMatrix& m = p.blocks[j].projector.matrix;
    herm = std::max(herm, hermitian_residual(m));
    idem = std::max(idem, distance(m * m, m));
    const double tr = m.trace().real();
    trace_gap = std::max(trace_gap, std::abs(tr - std::round(tr)));
    rank_sum += p.blocks[j].projector.rank;
    total += m;
    if (j > 0 && !detail::outcome_descending(p.blocks[j - 1].outcome, p.blocks[j].outcome))
      ordered = false;
    for (std::size_t k = j + 1; k < p.blocks.size(); ++k)
      ortho = std::max(ortho, (m * p.blocks[k].projector.matrix).frobenius_norm());
  }
  const double completeness = distance(total, ComplexMatrix::identity(p.dim));

  CheckReport report;
  report.add("hermitian", herm, tol * dim);
  report.add("idempotent", idem, tol * dim);
  report.add("integer_trace", trace_gap, tol);
  report.add("descending_outcomes", ordered ? 0.0 : 1.0, 0.0);
  report.add("orthogonality", ortho, tol);
  report.add("completeness", completeness, tol);
  report.add("rank_sum", std::abs(static_cast<double>(rank_sum) - dim), 0.0);
  return report;
}

// Re Tr(rho P), computed without forming the product.
inline double trace_of_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.dim() != b.dim()) {
    throw DimensionMismatch("trace_of_product: dimension " + std::to_string(a.dim()) +
                            " vs " + std::to_string(b.dim()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < a.dim(); ++j) s += (a(i, j) * b(j, i)).real();
  return s;
}

inline double born_probability(const DensityOperator& rho, const ComplexMatrix& projector,
                               double tol = kDefaultProbabilityTol) {
  const double p = trace_of_product(rho.matrix(), projector);
  if (p < -tol || p > 1.0 + tol) {
    throw OutOfRange("Born probability " + std::to_string(p) + " outside [0,1]");
  }
  return std::clamp(p, 0.0, 1.0);
}

inline double born_probability(const DensityOperator& rho, const Projector& p,
                               double tol = kDefaultProbabilityTol) {
  return born_probability(rho, p.matrix, tol);
}

}  // namespace qctx
