#pragma once

#include <cmath>
#include <cstdint>

#include <boost/multiprecision/cpp_int.hpp>

#include "qctx/errors.hpp"

namespace qctx {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline double to_double(const Rational& q) { return q.convert_to<double>(); }

namespace detail {

inline BigInt floor_of(const Rational& q) {
  BigInt n = boost::multiprecision::numerator(q), d = boost::multiprecision::denominator(q);
  BigInt f = n / d;
  if (n < 0 && f * d != n) f -= 1;
  return f;
}

// Simplest rational (smallest denominator) in [lo, hi], 0 <= lo <= hi.
inline Rational simplest_between(const Rational& lo, const Rational& hi) {
  const BigInt a = floor_of(lo);
  if (Rational(a) == lo) return lo;
  if (Rational(a + 1) <= hi) return Rational(a + 1);
  return Rational(a) + 1 / simplest_between(1 / (hi - Rational(a)), 1 / (lo - Rational(a)));
}

}  // namespace detail

// Simplest rational within `tol` of x.
inline Rational rationalize(double x, double tol = 1e-12) {
  if (!std::isfinite(x) || !(tol >= 0.0)) throw OutOfRange("cannot rationalize a non-finite value");
  if (x < 0) return -rationalize(-x, tol);
  const Rational target(x);  // exact binary value
  Rational lo = target - Rational(tol);
  if (lo < 0) lo = 0;
  return detail::simplest_between(lo, target + Rational(tol));
}

}  // namespace qctx
