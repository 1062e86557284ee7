#pragma once

// Contexts (maximal sets of pairwise-commuting observables), their Born-rule
// joint distributions, marginals, and the empirical model built from them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qctx/check_report.hpp"
#include "qctx/errors.hpp"
#include "qctx/scenario.hpp"
#include "qctx/spectral.hpp"

namespace qctx {

struct Context {
  std::vector<std::size_t> members;  // ascending observable indices

  bool contains(std::size_t i) const {
    return std::binary_search(members.begin(), members.end(), i);
  }

  friend bool operator==(const Context&, const Context&) = default;
  friend auto operator<=>(const Context&, const Context&) = default;
};

struct ContextDistribution {
  Context context;
  std::vector<std::vector<double>> member_values;  // descending eigenvalues per member
  std::vector<std::vector<double>> outcomes;       // full Cartesian product, canonical order
  std::vector<double> probs;

  double probability(const std::vector<double>& outcome, double tol = 1e-9) const {
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      bool match = outcome.size() == outcomes[i].size();
      for (std::size_t k = 0; match && k < outcome.size(); ++k)
        match = std::abs(outcome[k] - outcomes[i][k]) <= tol;
      if (match) return probs[i];
    }
    throw OutOfRange("outcome not present in context table");
  }
};

// Outcome values of one observable, in canonical (descending) order.
struct ObservableAxis {
  std::string label;
  std::vector<double> values;

  friend bool operator==(const ObservableAxis&, const ObservableAxis&) = default;
};

struct EmpiricalModel {
  Scenario scenario;
  std::vector<ObservableAxis> axes;
  std::vector<ContextDistribution> contexts;
  CheckReport compatibility;
};

inline std::string context_name(const Scenario& s, const Context& c) {
  std::string out = "{";
  for (std::size_t k = 0; k < c.members.size(); ++k) {
    if (k) out += ",";
    out += s.observables[c.members[k]].label;
  }
  return out + "}";
}

inline std::vector<PDI> observable_pdis(const Scenario& s, double tol = kDefaultSpectralTol) {
  std::vector<PDI> out;
  out.reserve(s.observables.size());
  for (const Observable& o : s.observables) out.push_back(spectral_decompose(o.matrix, tol));
  return out;
}

inline std::vector<std::pair<std::size_t, std::size_t>> compatibility_graph(
    const Scenario& s, double tol = kDefaultCommuteTol) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  const std::size_t n = s.observables.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (commutes(s.observables[i].matrix, s.observables[j].matrix, tol)) edges.emplace_back(i, j);
  return edges;
}

namespace detail {

using VertexSet = std::uint64_t;

inline int popcount(VertexSet v) { return __builtin_popcountll(v); }

// Bron-Kerbosch with pivoting (Tomita): pivot u maximizes |P ∩ N(u)|.
inline void bron_kerbosch(VertexSet r, VertexSet p, VertexSet x,
                          const std::vector<VertexSet>& adj, std::vector<VertexSet>& out) {
  if (p == 0 && x == 0) {
    out.push_back(r);
    return;
  }
  std::size_t pivot = 0;
  int best = -1;
  for (VertexSet px = p | x; px; px &= px - 1) {
    const auto u = static_cast<std::size_t>(__builtin_ctzll(px));
    const int deg = popcount(p & adj[u]);
    if (deg > best) {
      best = deg;
      pivot = u;
    }
  }
  for (VertexSet cand = p & ~adj[pivot]; cand; cand &= cand - 1) {
    const auto v = static_cast<std::size_t>(__builtin_ctzll(cand));
    const VertexSet bit = VertexSet{1} << v;
    bron_kerbosch(r | bit, p & adj[v], x & adj[v], adj, out);
    p &= ~bit;
    x |= bit;
  }
}

}  // namespace detail

// All maximal cliques of the compatibility graph, sorted lexicographically by
// member indices.
inline std::vector<Context> enumerate_contexts(const Scenario& s, double tol = kDefaultCommuteTol) {
  const std::size_t n = s.observables.size();
  if (n > 64) throw OutOfRange("context enumeration supports at most 64 observables");
  std::vector<detail::VertexSet> adj(n, 0);
  for (const auto& [i, j] : compatibility_graph(s, tol)) {
    adj[i] |= detail::VertexSet{1} << j;
    adj[j] |= detail::VertexSet{1} << i;
  }
  const detail::VertexSet all = n == 64 ? ~detail::VertexSet{0} : (detail::VertexSet{1} << n) - 1;
  std::vector<detail::VertexSet> cliques;
  detail::bron_kerbosch(0, all, 0, adj, cliques);

  std::vector<Context> out;
  for (detail::VertexSet c : cliques) {
    Context ctx;
    for (std::size_t i = 0; i < n; ++i)
      if (c >> i & 1) ctx.members.push_back(i);
    out.push_back(std::move(ctx));
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace detail {

// Mixed-radix digits of a flat index, last position fastest.
inline std::vector<std::size_t> digits_of(std::size_t index, const std::vector<std::size_t>& radix) {
  std::vector<std::size_t> d(radix.size());
  for (std::size_t k = radix.size(); k-- > 0;) {
    d[k] = index % radix[k];
    index /= radix[k];
  }
  return d;
}

inline std::size_t product_size(const std::vector<std::size_t>& radix) {
  std::size_t n = 1;
  for (std::size_t r : radix) n *= r;
  return n;
}

}  // namespace detail

// Born-rule joint distribution of a context using precomputed observable PDIs.
inline ContextDistribution context_distribution(const Scenario& s, const Context& c,
                                                const std::vector<PDI>& pdis,
                                                double tol = kDefaultProbabilityTol) {
  if (c.members.empty()) throw EmptySubset("context has no members");
  for (std::size_t a = 0; a < c.members.size(); ++a)
    for (std::size_t b = a + 1; b < c.members.size(); ++b)
      if (!commutes(s.observables[c.members[a]].matrix, s.observables[c.members[b]].matrix)) {
        throw Incompatible(s.observables[c.members[a]].label + " and " +
                           s.observables[c.members[b]].label + " do not commute");
      }

  ContextDistribution d;
  d.context = c;
  std::vector<std::size_t> radix;
  for (std::size_t m : c.members) {
    d.member_values.push_back(pdis[m].eigenvalues());
    radix.push_back(pdis[m].blocks.size());
  }
  const std::size_t cells = detail::product_size(radix);
  for (std::size_t idx = 0; idx < cells; ++idx) {
    const auto digits = detail::digits_of(idx, radix);
    std::vector<double> outcome;
    ComplexMatrix prod = pdis[c.members[0]].blocks[digits[0]].projector.matrix;
    outcome.push_back(d.member_values[0][digits[0]]);
    for (std::size_t k = 1; k < c.members.size(); ++k) {
      const ComplexMatrix& next = pdis[c.members[k]].blocks[digits[k]].projector.matrix;
      prod = symmetrized_product(prod, next);
      outcome.push_back(d.member_values[k][digits[k]]);
    }
    d.outcomes.push_back(std::move(outcome));
    d.probs.push_back(born_probability(s.rho, prod, tol));
  }
  return d;
}

inline ContextDistribution context_distribution(const Scenario& s, const Context& c,
                                                double tol = kDefaultProbabilityTol) {
  return context_distribution(s, c, observable_pdis(s), tol);
}

// Sums out every member not in `keep`. The result lists kept members in the
// order they appear in d.context.
inline ContextDistribution marginalize(const ContextDistribution& d,
                                       const std::vector<std::size_t>& keep) {
  if (keep.empty()) throw EmptySubset("marginalize: empty subset");
  std::vector<std::size_t> positions;
  for (std::size_t k = 0; k < d.context.members.size(); ++k) {
    if (std::find(keep.begin(), keep.end(), d.context.members[k]) != keep.end())
      positions.push_back(k);
  }
  for (std::size_t m : keep)
    if (!d.context.contains(m)) throw NotSubset("marginalize: observable not in context");

  ContextDistribution out;
  std::vector<std::size_t> in_radix, out_radix;
  for (const auto& v : d.member_values) in_radix.push_back(v.size());
  for (std::size_t k : positions) {
    out.context.members.push_back(d.context.members[k]);
    out.member_values.push_back(d.member_values[k]);
    out_radix.push_back(d.member_values[k].size());
  }
  const std::size_t out_cells = detail::product_size(out_radix);
  for (std::size_t idx = 0; idx < out_cells; ++idx) {
    const auto digits = detail::digits_of(idx, out_radix);
    std::vector<double> outcome;
    for (std::size_t k = 0; k < digits.size(); ++k) outcome.push_back(out.member_values[k][digits[k]]);
    out.outcomes.push_back(std::move(outcome));
  }
  out.probs.assign(out_cells, 0.0);
  for (std::size_t idx = 0; idx < d.probs.size(); ++idx) {
    const auto digits = detail::digits_of(idx, in_radix);
    std::size_t flat = 0;
    for (std::size_t k = 0; k < positions.size(); ++k) flat = flat * out_radix[k] + digits[positions[k]];
    out.probs[flat] += d.probs[idx];
  }
  return out;
}

// Compares marginals on the intersection of every overlapping pair of contexts.
inline CheckReport check_compatibility(const EmpiricalModel& m, double tol = kDefaultProbabilityTol) {
  CheckReport report;
  for (std::size_t i = 0; i < m.contexts.size(); ++i) {
    for (std::size_t j = i + 1; j < m.contexts.size(); ++j) {
      const Context& ci = m.contexts[i].context;
      const Context& cj = m.contexts[j].context;
      std::vector<std::size_t> shared;
      std::set_intersection(ci.members.begin(), ci.members.end(), cj.members.begin(),
                            cj.members.end(), std::back_inserter(shared));
      if (shared.empty()) continue;
      const ContextDistribution a = marginalize(m.contexts[i], shared);
      const ContextDistribution b = marginalize(m.contexts[j], shared);
      double worst = 0.0;
      if (a.probs.size() != b.probs.size()) {
        worst = 1.0;
      } else {
        for (std::size_t k = 0; k < a.probs.size(); ++k)
          worst = std::max(worst, std::abs(a.probs[k] - b.probs[k]));
      }
      report.add(context_name(m.scenario, ci) + "~" + context_name(m.scenario, cj), worst, tol);
    }
  }
  return report;
}

inline EmpiricalModel build_empirical_model(const Scenario& s, double tol = kDefaultProbabilityTol) {
  const std::vector<PDI> pdis = observable_pdis(s);
  EmpiricalModel m{s, {}, {}, {}};
  for (std::size_t i = 0; i < s.observables.size(); ++i)
    m.axes.push_back({s.observables[i].label, pdis[i].eigenvalues()});
  for (const Context& c : enumerate_contexts(s)) m.contexts.push_back(context_distribution(s, c, pdis, tol));
  m.compatibility = check_compatibility(m, tol);
  if (!m.compatibility.passed()) {
    throw IncompatibleMarginals("context marginals disagree (max discrepancy " +
                                std::to_string(m.compatibility.max_residual()) + ")");
  }
  return m;
}

}  // namespace qctx
