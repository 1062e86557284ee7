#pragma once

// Existence of a global joint distribution reproducing every context table,
// posed as linear feasibility over the product outcome space of all
// observables.
//
// Feasible models yield an explicit global table (a basic solution of the
// phase-1 simplex). Infeasible models yield a witness: weights w per
// (context, outcome) row and a bound b such that every global cell satisfies
// sum_{rows covering the cell} w <= b while the model scores w.q > b.
//
// The witness is taken from the dual of the visibility program
//   minimize nu  s.t.  A x - nu q0 = q,  x >= 0, nu >= 0
// where q0 is the image of the uniform global table. Its optimal dual is the
// facet of the local polytope crossed by the segment from q0 to q, which for
// Bell-type scenarios is a CHSH-type inequality rather than an arbitrary
// Farkas ray. The raw phase-1 Farkas ray remains as fallback.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <type_traits>
#include <string>
#include <utility>
#include <vector>

#include "qctx/contexts.hpp"
#include "qctx/errors.hpp"
#include "qctx/rational.hpp"
#include "qctx/simplex.hpp"

namespace qctx {

inline constexpr double kDefaultFeasibilityTol = 1e-9;

enum class Verdict { globally_noncontextual, globally_contextual };

inline std::string to_string(Verdict v) {
  return v == Verdict::globally_noncontextual ? "GloballyNoncontextual" : "GloballyContextual";
}

// One equality row: the global cells projecting onto `outcome` in `context`
// must sum to `rhs`.
struct LpRow {
  std::size_t context = 0;
  std::vector<double> outcome;
  std::vector<std::size_t> cells;
  double rhs = 0.0;
};

struct LPSystem {
  std::vector<ObservableAxis> axes;
  std::vector<Context> contexts;
  std::vector<std::string> context_names;
  std::vector<LpRow> rows;
  std::size_t num_cells = 0;
  bool single_context = false;  // every observable commutes with every other

  std::vector<std::size_t> radix() const {
    std::vector<std::size_t> r;
    for (const ObservableAxis& a : axes) r.push_back(a.values.size());
    return r;
  }

  std::vector<double> cell_outcome(std::size_t cell) const {
    const auto digits = detail::digits_of(cell, radix());
    std::vector<double> out;
    for (std::size_t k = 0; k < digits.size(); ++k) out.push_back(axes[k].values[digits[k]]);
    return out;
  }

  // Cells matching a partial assignment (nullopt = any value on that axis).
  std::vector<std::size_t> select_cells(const std::vector<std::optional<double>>& partial,
                                        double tol = 1e-9) const {
    if (partial.size() != axes.size()) throw UnknownCell("cell selector has wrong arity");
    for (std::size_t k = 0; k < partial.size(); ++k) {
      if (!partial[k]) continue;
      const auto& vals = axes[k].values;
      const bool known = std::any_of(vals.begin(), vals.end(),
                                     [&](double v) { return std::abs(v - *partial[k]) <= tol; });
      if (!known) {
        throw UnknownCell(axes[k].label + " has no outcome " + std::to_string(*partial[k]));
      }
    }
    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < num_cells; ++c) {
      const auto oc = cell_outcome(c);
      bool match = true;
      for (std::size_t k = 0; match && k < oc.size(); ++k)
        match = !partial[k] || std::abs(oc[k] - *partial[k]) <= tol;
      if (match) out.push_back(c);
    }
    return out;
  }

  std::size_t find_cell(const std::vector<double>& outcome, double tol = 1e-9) const {
    std::vector<std::optional<double>> partial(outcome.begin(), outcome.end());
    const auto cells = select_cells(partial, tol);
    if (cells.size() != 1) throw UnknownCell("outcome does not identify a single cell");
    return cells.front();
  }

  std::vector<double> coefficients(std::size_t row) const {
    std::vector<double> out(num_cells, 0.0);
    for (std::size_t c : rows[row].cells) out[c] = 1.0;
    return out;
  }

  std::vector<double> rhs() const {
    std::vector<double> out;
    for (const LpRow& r : rows) out.push_back(r.rhs);
    return out;
  }
};

struct GlobalTable {
  std::vector<ObservableAxis> axes;
  std::vector<double> cells;
  // False whenever some observables fail to commute: the table is then a
  // classical construct with no projective sample space behind it.
  bool quantum_sample_space = false;

  friend bool operator==(const GlobalTable&, const GlobalTable&) = default;
};

// Canonical form of a witness on scenarios made of two-outcome observables
// measured in pairs: sum_k sign_k E_k <= bound, E_k the +-1 correlator of
// context k (first listed outcome counts as +1).
struct CorrelatorForm {
  std::vector<int> signs;
  std::vector<double> correlators;
  double value = 0.0;

  friend bool operator==(const CorrelatorForm&, const CorrelatorForm&) = default;
};

struct Witness {
  std::vector<double> weights;  // aligned with LPSystem::rows
  double bound = 0.0;
  double violation = 0.0;
  std::optional<CorrelatorForm> correlator;
};

struct SolverStats {
  std::size_t iterations = 0;
  double max_residual = 0.0;
  double infeasibility = 0.0;
  std::size_t eliminated_cells = 0;
  bool exact = false;
};

struct FeasibilityResult {
  Verdict verdict = Verdict::globally_noncontextual;
  std::optional<GlobalTable> table;
  std::optional<Witness> witness;
  SolverStats stats;
};

inline LPSystem assemble_lp(const EmpiricalModel& m) {
  if (!m.compatibility.passed()) {
    throw ModelIncoherent("empirical model failed its compatibility check");
  }
  LPSystem lp;
  lp.axes = m.axes;
  const auto radix = lp.radix();
  lp.num_cells = detail::product_size(radix);

  std::vector<std::size_t> offset;
  for (std::size_t k = 0; k < m.contexts.size(); ++k) {
    const ContextDistribution& d = m.contexts[k];
    for (std::size_t p = 0; p < d.context.members.size(); ++p) {
      if (d.member_values[p] != m.axes[d.context.members[p]].values) {
        throw ModelIncoherent("context table outcomes do not match observable spectra");
      }
    }
    lp.contexts.push_back(d.context);
    lp.context_names.push_back(context_name(m.scenario, d.context));
    offset.push_back(lp.rows.size());
    for (std::size_t t = 0; t < d.outcomes.size(); ++t)
      lp.rows.push_back({k, d.outcomes[t], {}, d.probs[t]});
  }
  for (std::size_t cell = 0; cell < lp.num_cells; ++cell) {
    const auto digits = detail::digits_of(cell, radix);
    for (std::size_t k = 0; k < m.contexts.size(); ++k) {
      const ContextDistribution& d = m.contexts[k];
      std::size_t flat = 0;
      for (std::size_t p = 0; p < d.context.members.size(); ++p)
        flat = flat * d.member_values[p].size() + digits[d.context.members[p]];
      lp.rows[offset[k] + flat].cells.push_back(cell);
    }
  }
  lp.single_context =
      m.contexts.size() == 1 && m.contexts.front().context.members.size() == m.axes.size();
  return lp;
}

// max_r |sum_{c in row r} x_c - rhs_r|
inline double max_constraint_residual(const LPSystem& lp, const std::vector<double>& x) {
  double worst = 0.0;
  for (const LpRow& r : lp.rows) {
    double s = 0.0;
    for (std::size_t c : r.cells) s += x[c];
    worst = std::max(worst, std::abs(s - r.rhs));
  }
  return worst;
}

// Largest value any single global cell can give the witness sum.
inline double witness_cell_max(const LPSystem& lp, const std::vector<double>& weights) {
  std::vector<double> f(lp.num_cells, 0.0);
  for (std::size_t r = 0; r < lp.rows.size(); ++r)
    for (std::size_t c : lp.rows[r].cells) f[c] += weights[r];
  return *std::max_element(f.begin(), f.end());
}

inline double witness_value(const LPSystem& lp, const std::vector<double>& weights) {
  double s = 0.0;
  for (std::size_t r = 0; r < lp.rows.size(); ++r) s += weights[r] * lp.rows[r].rhs;
  return s;
}

inline CheckReport validate_witness(const LPSystem& lp, const Witness& w,
                                    double tol = kDefaultFeasibilityTol) {
  CheckReport report;
  report.add("certificate", std::max(0.0, witness_cell_max(lp, w.weights) - w.bound), tol);
  const double violation = witness_value(lp, w.weights) - w.bound;
  report.checks.push_back({"violation", violation > tol, violation});
  return report;
}

namespace detail {

template <class T>
struct ReducedLp {
  StandardFormLp<T> lp;
  std::vector<std::size_t> cell_of_col;
  std::vector<bool> forced_zero;
};

// Rows with zero right-hand side force every covered cell to zero; those cells
// and rows leave the simplex.
template <class T>
ReducedLp<T> presolve(const LPSystem& sys, const std::vector<T>& rhs, const T& zero_tol) {
  ReducedLp<T> out;
  out.forced_zero.assign(sys.num_cells, false);
  std::vector<std::size_t> kept_rows;
  for (std::size_t r = 0; r < sys.rows.size(); ++r) {
    if (rhs[r] <= zero_tol) {
      for (std::size_t c : sys.rows[r].cells) out.forced_zero[c] = true;
    } else {
      kept_rows.push_back(r);
    }
  }
  std::vector<std::size_t> col_of_cell(sys.num_cells, sys.num_cells);
  for (std::size_t c = 0; c < sys.num_cells; ++c) {
    if (out.forced_zero[c]) continue;
    col_of_cell[c] = out.cell_of_col.size();
    out.cell_of_col.push_back(c);
  }
  out.lp = StandardFormLp<T>(kept_rows.size(), out.cell_of_col.size());
  for (std::size_t i = 0; i < kept_rows.size(); ++i) {
    const LpRow& row = sys.rows[kept_rows[i]];
    for (std::size_t c : row.cells)
      if (col_of_cell[c] != sys.num_cells) out.lp.at(i, col_of_cell[c]) = T(1);
    out.lp.b[i] = rhs[kept_rows[i]];
  }
  return out;
}

template <class T>
SimplexOptions<T> simplex_options(double tol);

template <>
inline SimplexOptions<double> simplex_options<double>(double tol) {
  return {1e-12, tol, 200000};
}

template <>
inline SimplexOptions<Rational> simplex_options<Rational>(double) {
  return {Rational(0), Rational(0), 200000};
}

inline double as_double(double v) { return v; }
inline double as_double(const Rational& v) { return to_double(v); }

// Dual of the visibility program; nullopt when it does not solve cleanly.
template <class T>
std::optional<std::vector<double>> visibility_duals(const LPSystem& sys, const std::vector<T>& rhs,
                                                    double tol, std::size_t& iterations) {
  const std::size_t n = sys.num_cells;
  StandardFormLp<T> lp(sys.rows.size(), n + 1);
  for (std::size_t r = 0; r < sys.rows.size(); ++r) {
    for (std::size_t c : sys.rows[r].cells) lp.at(r, c) = T(1);
    lp.at(r, n) = -T(static_cast<long long>(sys.rows[r].cells.size())) /
                  T(static_cast<long long>(n));
    lp.b[r] = rhs[r] < T(0) ? T(0) : rhs[r];
  }
  lp.c.assign(n + 1, T(0));
  lp.c[n] = T(1);
  const LpSolution<T> sol = solve_lp(lp, simplex_options<T>(tol));
  iterations += sol.iterations;
  if (sol.status != LpStatus::optimal) return std::nullopt;
  std::vector<double> y;
  for (const T& v : sol.duals) y.push_back(as_double(v));
  return y;
}

// Phase-1 Farkas ray lifted back to the full row set: rows removed by
// presolve get weights low enough to keep every cell sum non-positive.
inline std::vector<double> lift_farkas(const LPSystem& sys, const std::vector<double>& rhs,
                                       const std::vector<double>& reduced_duals, double zero_tol) {
  std::vector<double> w(sys.rows.size(), 0.0);
  std::size_t i = 0;
  for (std::size_t r = 0; r < sys.rows.size(); ++r)
    if (rhs[r] > zero_tol) w[r] = reduced_duals[i++];
  for (std::size_t r = 0; r < sys.rows.size(); ++r) {
    if (rhs[r] > zero_tol) continue;
    double worst = 0.0;
    for (std::size_t c : sys.rows[r].cells) {
      double s = 0.0;
      for (std::size_t q = 0; q < sys.rows.size(); ++q) {
        if (q == r) continue;
        const auto& cells = sys.rows[q].cells;
        if (std::find(cells.begin(), cells.end(), c) != cells.end()) s += w[q];
      }
      worst = std::max(worst, s);
    }
    w[r] = -worst;
  }
  return w;
}

// Recognizes a witness equivalent to sum_k sign_k E_k <= 2 on four
// two-outcome observables measured in four pairwise contexts.
inline std::optional<CorrelatorForm> correlator_form(const LPSystem& sys,
                                                     const std::vector<double>& weights) {
  for (const ObservableAxis& a : sys.axes)
    if (a.values.size() != 2) return std::nullopt;
  if (sys.contexts.size() != 4) return std::nullopt;
  for (const Context& c : sys.contexts)
    if (c.members.size() != 2) return std::nullopt;

  const std::size_t n = sys.num_cells;
  const auto radix = sys.radix();
  std::vector<double> f(n, 0.0);
  for (std::size_t r = 0; r < sys.rows.size(); ++r)
    for (std::size_t c : sys.rows[r].cells) f[c] += weights[r];
  auto spin = [&](std::size_t cell, std::size_t axis) {
    return digits_of(cell, radix)[axis] == 0 ? 1.0 : -1.0;
  };

  double scale = 0.0;
  for (double v : f) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return std::nullopt;
  const double eps = 1e-7 * scale;

  for (std::size_t axis = 0; axis < sys.axes.size(); ++axis) {
    double lin = 0.0;
    for (std::size_t c = 0; c < n; ++c) lin += f[c] * spin(c, axis);
    if (std::abs(lin / static_cast<double>(n)) > eps) return std::nullopt;
  }
  std::vector<double> pair_coeff;
  for (const Context& ctx : sys.contexts) {
    double s = 0.0;
    for (std::size_t c = 0; c < n; ++c) s += f[c] * spin(c, ctx.members[0]) * spin(c, ctx.members[1]);
    pair_coeff.push_back(s / static_cast<double>(n));
  }
  const double lambda = std::abs(pair_coeff.front());
  if (lambda <= eps) return std::nullopt;
  CorrelatorForm form;
  int negatives = 0;
  for (double p : pair_coeff) {
    if (std::abs(std::abs(p) - lambda) > 1e-6 * lambda) return std::nullopt;
    form.signs.push_back(p > 0 ? 1 : -1);
    negatives += p < 0;
  }
  if (negatives % 2 == 0) return std::nullopt;  // trivial: bounded by 4, never violated
  return form;
}

template <class T>
std::optional<Witness> make_witness(const LPSystem& sys, const std::vector<T>& rhs, double tol,
                                    const std::vector<double>* farkas, std::size_t& iterations) {
  std::vector<std::vector<double>> candidates;
  if (auto y = visibility_duals(sys, rhs, tol, iterations)) candidates.push_back(std::move(*y));
  if (farkas) candidates.push_back(*farkas);

  for (const std::vector<double>& raw : candidates) {
    Witness w;
    if (auto form = correlator_form(sys, raw)) {
      w.weights.assign(sys.rows.size(), 0.0);
      for (std::size_t r = 0; r < sys.rows.size(); ++r) {
        const LpRow& row = sys.rows[r];
        const Context& ctx = sys.contexts[row.context];
        const double s0 = row.outcome[0] == sys.axes[ctx.members[0]].values[0] ? 1.0 : -1.0;
        const double s1 = row.outcome[1] == sys.axes[ctx.members[1]].values[0] ? 1.0 : -1.0;
        w.weights[r] = form->signs[row.context] * s0 * s1;
      }
      form->correlators.assign(sys.contexts.size(), 0.0);
      for (std::size_t r = 0; r < sys.rows.size(); ++r)
        form->correlators[sys.rows[r].context] += w.weights[r] * form->signs[sys.rows[r].context] *
                                                  sys.rows[r].rhs;
      form->value = witness_value(sys, w.weights);
      w.correlator = std::move(form);
    } else {
      double scale = 0.0;
      for (double v : raw) scale = std::max(scale, std::abs(v));
      if (scale == 0.0) continue;
      for (double v : raw) w.weights.push_back(v / scale);
    }
    w.bound = witness_cell_max(sys, w.weights);
    w.violation = witness_value(sys, w.weights) - w.bound;
    if (validate_witness(sys, w, tol).passed()) return w;
  }
  return std::nullopt;
}

template <class T>
std::vector<T> row_rhs(const LPSystem& sys);

template <>
inline std::vector<double> row_rhs<double>(const LPSystem& sys) {
  return sys.rhs();
}

// Exact mode snaps each probability to the simplest rational within 1e-12 and
// insists the snapped tables are exactly consistent.
template <>
inline std::vector<Rational> row_rhs<Rational>(const LPSystem& sys) {
  std::vector<Rational> out;
  for (const LpRow& r : sys.rows) out.push_back(rationalize(r.rhs, 1e-12));

  for (std::size_t k = 0; k < sys.contexts.size(); ++k) {
    Rational total = 0;
    for (std::size_t r = 0; r < sys.rows.size(); ++r)
      if (sys.rows[r].context == k) total += out[r];
    if (total != 1) {
      throw NumericalFailure("exact mode: context " + sys.context_names[k] +
                             " does not sum to exactly 1 after rationalization");
    }
  }
  for (std::size_t i = 0; i < sys.contexts.size(); ++i) {
    for (std::size_t j = i + 1; j < sys.contexts.size(); ++j) {
      const auto& mi = sys.contexts[i].members;
      const auto& mj = sys.contexts[j].members;
      std::vector<std::size_t> shared;
      std::set_intersection(mi.begin(), mi.end(), mj.begin(), mj.end(), std::back_inserter(shared));
      if (shared.empty()) continue;
      auto marginal = [&](std::size_t k, const std::vector<std::size_t>& members) {
        std::map<std::vector<double>, Rational> acc;
        for (std::size_t r = 0; r < sys.rows.size(); ++r) {
          if (sys.rows[r].context != k) continue;
          std::vector<double> key;
          for (std::size_t s : shared) {
            const auto pos = std::find(members.begin(), members.end(), s) - members.begin();
            key.push_back(sys.rows[r].outcome[static_cast<std::size_t>(pos)]);
          }
          acc[key] += out[r];
        }
        return acc;
      };
      if (marginal(i, mi) != marginal(j, mj)) {
        throw NumericalFailure("exact mode: marginals of " + sys.context_names[i] + " and " +
                               sys.context_names[j] +
                               " are not exactly equal after rationalization");
      }
    }
  }
  return out;
}

template <class T>
FeasibilityResult solve_feasibility_impl(const LPSystem& sys, const std::vector<T>& rhs, double tol) {
  const T zero_tol = std::is_same_v<T, double> ? T(tol) : T(0);
  const ReducedLp<T> red = presolve(sys, rhs, zero_tol);

  FeasibilityResult out;
  out.stats.exact = !std::is_same_v<T, double>;
  out.stats.eliminated_cells =
      static_cast<std::size_t>(std::count(red.forced_zero.begin(), red.forced_zero.end(), true));
  const LpSolution<T> sol = solve_lp(red.lp, simplex_options<T>(tol));
  out.stats.iterations = sol.iterations;
  out.stats.infeasibility = as_double(sol.infeasibility);
  if (sol.status == LpStatus::iteration_limit) {
    throw NumericalFailure("simplex iteration limit reached");
  }

  if (sol.status == LpStatus::optimal) {
    std::vector<double> x(sys.num_cells, 0.0);
    for (std::size_t j = 0; j < red.cell_of_col.size(); ++j) {
      const double v = as_double(sol.x[j]);
      x[red.cell_of_col[j]] = v < 0.0 && v >= -tol ? 0.0 : v;
    }
    out.stats.max_residual = max_constraint_residual(sys, x);
    if (out.stats.max_residual > tol) {
      throw NumericalFailure("global table residual " + std::to_string(out.stats.max_residual) +
                             " exceeds tolerance");
    }
    out.verdict = Verdict::globally_noncontextual;
    out.table = GlobalTable{sys.axes, std::move(x), sys.single_context};
    return out;
  }

  std::vector<double> reduced;
  for (const T& v : sol.duals) reduced.push_back(as_double(v));
  const std::vector<double> farkas = lift_farkas(sys, sys.rhs(), reduced, as_double(zero_tol));
  auto witness = make_witness<T>(sys, rhs, tol, &farkas, out.stats.iterations);
  if (!witness) {
    throw NumericalFailure("system looks infeasible but no valid certificate was found");
  }
  out.verdict = Verdict::globally_contextual;
  out.witness = std::move(witness);
  return out;
}

template <class T>
std::pair<double, double> range_impl(const LPSystem& sys, const std::vector<std::size_t>& cells,
                                     double tol) {
  const std::vector<T> rhs = row_rhs<T>(sys);
  const T zero_tol = std::is_same_v<T, double> ? T(tol) : T(0);
  ReducedLp<T> red = presolve(sys, rhs, zero_tol);

  std::vector<T> indicator(red.cell_of_col.size(), T(0));
  for (std::size_t j = 0; j < red.cell_of_col.size(); ++j)
    if (std::find(cells.begin(), cells.end(), red.cell_of_col[j]) != cells.end()) indicator[j] = T(1);

  auto optimize = [&](const std::vector<T>& c) {
    red.lp.c = c;
    const LpSolution<T> sol = solve_lp(red.lp, simplex_options<T>(tol));
    if (sol.status == LpStatus::infeasible) {
      throw InfeasibleSystem("no global distribution exists for this model");
    }
    if (sol.status != LpStatus::optimal) throw NumericalFailure("range optimization failed");
    return as_double(sol.objective);
  };
  double lo = optimize(indicator);
  for (T& v : indicator) v = -v;
  double hi = -optimize(indicator);
  auto snap = [&](double v) {
    if (v <= 0.0 && v >= -tol) return 0.0;
    return v > 1.0 && v <= 1.0 + tol ? 1.0 : v;
  };
  lo = snap(lo);
  hi = snap(hi);
  if (lo > hi) std::swap(lo, hi);
  return {lo, hi};
}

}  // namespace detail

inline FeasibilityResult solve_feasibility(const LPSystem& lp, double tol = kDefaultFeasibilityTol,
                                           bool exact = false) {
  return exact ? detail::solve_feasibility_impl<Rational>(lp, detail::row_rhs<Rational>(lp), tol)
               : detail::solve_feasibility_impl<double>(lp, lp.rhs(), tol);
}

// Exact solve with caller-supplied rational probabilities (aligned with
// lp.rows), for models whose tables are known exactly.
inline FeasibilityResult solve_feasibility_exact(const LPSystem& lp, const std::vector<Rational>& rhs,
                                                 double tol = kDefaultFeasibilityTol) {
  if (rhs.size() != lp.rows.size()) throw DimensionMismatch("one exact value per LP row required");
  return detail::solve_feasibility_impl<Rational>(lp, rhs, tol);
}

// Range of the total probability a global table can put on `cells`.
inline std::pair<double, double> cells_range(const LPSystem& lp, const std::vector<std::size_t>& cells,
                                             double tol = kDefaultFeasibilityTol, bool exact = false) {
  return exact ? detail::range_impl<Rational>(lp, cells, tol)
               : detail::range_impl<double>(lp, cells, tol);
}

inline std::pair<double, double> coordinate_range(const LPSystem& lp, const std::vector<double>& cell,
                                                  double tol = kDefaultFeasibilityTol,
                                                  bool exact = false) {
  return cells_range(lp, {lp.find_cell(cell)}, tol, exact);
}

inline Witness extract_witness(const LPSystem& lp, double tol = kDefaultFeasibilityTol,
                               bool exact = false) {
  FeasibilityResult r = solve_feasibility(lp, tol, exact);
  if (r.verdict != Verdict::globally_contextual) {
    throw NotInfeasible("a global distribution exists; there is nothing to witness");
  }
  return std::move(*r.witness);
}

inline FeasibilityResult classify(const EmpiricalModel& m, double tol = kDefaultFeasibilityTol,
                                  bool exact = false) {
  return solve_feasibility(assemble_lp(m), tol, exact);
}

}  // namespace qctx
