#pragma once

// Conversions between the oracle's GMP rationals and the library's types.

#include <string>
#include <vector>

#include "exact_oracle.hpp"
#include "qctx/rational.hpp"

namespace qctx::oracle {

inline Rational to_rational(const Q& q) {
  return Rational(BigInt(q.get_num().get_str()), BigInt(q.get_den().get_str()));
}

// Exact right-hand side in LP row order: contexts in sorted order, each
// table in canonical outcome order.
inline std::vector<Rational> exact_rhs(const OracleVerdict& v) {
  std::vector<Rational> out;
  for (const ExactTable& t : v.tables)
    for (const Q& p : t.probs) out.push_back(to_rational(p));
  return out;
}

}  // namespace qctx::oracle
