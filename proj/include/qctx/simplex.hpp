#pragma once

// Dense two-phase simplex over an arbitrary ordered field (double or exact
// rationals). Standard form: minimize c^T x subject to A x = b, x >= 0.
//
// Pivoting follows Bland's rule (smallest eligible index enters, ties in the
// ratio test broken by smallest basic variable index), so runs are
// deterministic and cannot cycle. With T = double, `pivot_eps` guards the
// zero tests; with exact rationals it should be 0.

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "qctx/errors.hpp"

namespace qctx {

template <class T>
struct StandardFormLp {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> a;  // row-major, rows x cols
  std::vector<T> b;
  std::vector<T> c;  // empty: feasibility only

  StandardFormLp() = default;
  StandardFormLp(std::size_t r, std::size_t n) : rows(r), cols(n), a(r * n, T(0)), b(r, T(0)) {}

  T& at(std::size_t r, std::size_t col) { return a[r * cols + col]; }
  const T& at(std::size_t r, std::size_t col) const { return a[r * cols + col]; }
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

template <class T>
struct SimplexOptions {
  T pivot_eps = T(0);
  T feasibility_tol = T(0);  // phase-1 optimum above this means infeasible
  std::size_t max_iterations = 200000;
};

template <class T>
struct LpSolution {
  LpStatus status = LpStatus::iteration_limit;
  std::vector<T> x;
  // Optimal: dual prices y with A^T y <= c. Infeasible: Farkas ray with
  // A^T y <= 0 and b^T y = infeasibility > 0.
  std::vector<T> duals;
  T objective = T(0);
  T infeasibility = T(0);
  std::size_t iterations = 0;
};

namespace detail {

template <class T>
class Tableau {
 public:
  Tableau(const StandardFormLp<T>& lp, const SimplexOptions<T>& opt)
      : m_(lp.rows), n_(lp.cols), width_(lp.cols + lp.rows + 1), opt_(opt),
        t_(m_ * width_, T(0)), z_(width_, T(0)), basis_(m_), sign_(m_, 1),
        redundant_(m_, false) {
    for (std::size_t i = 0; i < m_; ++i) {
      sign_[i] = lp.b[i] < T(0) ? -1 : 1;
      const T s = T(sign_[i]);
      for (std::size_t j = 0; j < n_; ++j) at(i, j) = s * lp.at(i, j);
      at(i, n_ + i) = T(1);
      rhs(i) = s * lp.b[i];
      basis_[i] = n_ + i;
    }
  }

  std::size_t iterations() const { return iterations_; }

  // Minimizes the sum of artificials; returns that minimum.
  T phase_one() {
    std::fill(z_.begin(), z_.end(), T(0));
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) z_[j] -= at(i, j);
      z_[width_ - 1] -= rhs(i);
    }
    run(n_ + m_);
    return -z_[width_ - 1];
  }

  // Farkas ray read from phase-1 reduced costs of the artificial columns.
  std::vector<T> phase_one_duals() const {
    std::vector<T> y(m_);
    for (std::size_t i = 0; i < m_; ++i) y[i] = T(sign_[i]) * (T(1) - z_[n_ + i]);
    return y;
  }

  // Pivots basic artificials out where possible; the rest mark redundant rows.
  void expel_artificials() {
    for (std::size_t i = 0; i < m_; ++i) {
      if (basis_[i] < n_) continue;
      std::size_t col = n_;
      for (std::size_t j = 0; j < n_; ++j) {
        if (abs_gt(at(i, j), opt_.pivot_eps)) {
          col = j;
          break;
        }
      }
      if (col == n_) {
        redundant_[i] = true;
      } else {
        pivot(i, col);
      }
    }
  }

  // Minimizes c^T x from the current feasible basis. False if unbounded.
  bool phase_two(const std::vector<T>& c) {
    std::fill(z_.begin(), z_.end(), T(0));
    for (std::size_t j = 0; j < n_; ++j) z_[j] = c[j];
    for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t bv = basis_[i];
      const T cb = bv < n_ ? c[bv] : T(0);
      if (cb == T(0)) continue;
      for (std::size_t j = 0; j < width_; ++j) z_[j] -= cb * at(i, j);
    }
    return run(n_);
  }

  std::vector<T> phase_two_duals() const {
    std::vector<T> y(m_);
    for (std::size_t i = 0; i < m_; ++i) y[i] = T(sign_[i]) * (-z_[n_ + i]);
    return y;
  }

  T objective() const { return -z_[width_ - 1]; }

  std::vector<T> solution() const {
    std::vector<T> x(n_, T(0));
    for (std::size_t i = 0; i < m_; ++i)
      if (basis_[i] < n_) x[basis_[i]] = rhs(i);
    return x;
  }

  bool hit_limit() const { return limit_hit_; }

 private:
  T& at(std::size_t i, std::size_t j) { return t_[i * width_ + j]; }
  const T& at(std::size_t i, std::size_t j) const { return t_[i * width_ + j]; }
  T& rhs(std::size_t i) { return t_[i * width_ + width_ - 1]; }
  const T& rhs(std::size_t i) const { return t_[i * width_ + width_ - 1]; }

  static bool abs_gt(const T& v, const T& eps) { return v > eps || v < -eps; }

  void pivot(std::size_t r, std::size_t col) {
    const T p = at(r, col);
    for (std::size_t j = 0; j < width_; ++j) at(r, j) /= p;
    at(r, col) = T(1);
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      const T f = at(i, col);
      if (f == T(0)) continue;
      for (std::size_t j = 0; j < width_; ++j) at(i, j) -= f * at(r, j);
      at(i, col) = T(0);
    }
    const T f = z_[col];
    if (f != T(0)) {
      for (std::size_t j = 0; j < width_; ++j) z_[j] -= f * at(r, j);
      z_[col] = T(0);
    }
    basis_[r] = col;
    ++iterations_;
  }

  // Bland iterations over columns [0, allowed). False if unbounded.
  bool run(std::size_t allowed) {
    while (true) {
      if (iterations_ >= opt_.max_iterations) {
        limit_hit_ = true;
        return true;
      }
      std::size_t enter = allowed;
      for (std::size_t j = 0; j < allowed; ++j) {
        if (z_[j] < -opt_.pivot_eps) {
          enter = j;
          break;
        }
      }
      if (enter == allowed) return true;

      std::size_t leave = m_;
      T best = T(0);
      for (std::size_t i = 0; i < m_; ++i) {
        if (redundant_[i] || !(at(i, enter) > opt_.pivot_eps)) continue;
        const T ratio = rhs(i) / at(i, enter);
        if (leave == m_ || ratio < best - opt_.pivot_eps) {
          leave = i;
          best = ratio;
        } else if (!(ratio > best + opt_.pivot_eps) && basis_[i] < basis_[leave]) {
          leave = i;
          best = ratio;
        }
      }
      if (leave == m_) return false;
      pivot(leave, enter);
    }
  }

  std::size_t m_, n_, width_;
  SimplexOptions<T> opt_;
  std::vector<T> t_;
  std::vector<T> z_;  // reduced costs; last slot holds -objective
  std::vector<std::size_t> basis_;
  std::vector<int> sign_;
  std::vector<bool> redundant_;
  std::size_t iterations_ = 0;
  bool limit_hit_ = false;
};

}  // namespace detail

template <class T>
LpSolution<T> solve_lp(const StandardFormLp<T>& lp, const SimplexOptions<T>& opt = {}) {
  if (lp.a.size() != lp.rows * lp.cols || lp.b.size() != lp.rows ||
      (!lp.c.empty() && lp.c.size() != lp.cols)) {
    throw DimensionMismatch("solve_lp: inconsistent problem dimensions");
  }
  LpSolution<T> out;
  detail::Tableau<T> tab(lp, opt);
  out.infeasibility = tab.phase_one();
  out.iterations = tab.iterations();
  if (tab.hit_limit()) {
    out.status = LpStatus::iteration_limit;
    return out;
  }
  if (out.infeasibility > opt.feasibility_tol) {
    out.status = LpStatus::infeasible;
    out.duals = tab.phase_one_duals();
    return out;
  }
  tab.expel_artificials();
  if (!lp.c.empty()) {
    const bool bounded = tab.phase_two(lp.c);
    out.iterations = tab.iterations();
    if (tab.hit_limit()) {
      out.status = LpStatus::iteration_limit;
      return out;
    }
    if (!bounded) {
      out.status = LpStatus::unbounded;
      return out;
    }
    out.objective = tab.objective();
    out.duals = tab.phase_two_duals();
  }
  out.status = LpStatus::optimal;
  out.x = tab.solution();
  return out;
}

}  // namespace qctx
