#pragma once

// Stochastic projective-measurement simulator.
//
// A run samples the microscopic property first and only then looks at the
// apparatus handle:
//
//   1. draw u1, pick property j of the primary PDI by inverse CDF over
//      Tr(rho P_j); the primary pointer is set to position j;
//   2. read the handle (B or C), draw u2, pick the secondary outcome k from
//      Tr(rho P_j Q_k) / Tr(rho P_j) using that handle's PDI.
//
// Because u1 is consumed before the handle is read, the same seed gives the
// same primary pointer whichever way the handle is set. That ordering is the
// whole mechanism behind counterfactual_pair(): the A outcome of a run with
// the handle at B is exactly the one the run would have had at C.
//
// Pointer positions are plain integers (the index of the PDI block they
// report); apparatus failure outcomes are not modelled.

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qctx/check_report.hpp"
#include "qctx/errors.hpp"
#include "qctx/rng.hpp"
#include "qctx/scenario.hpp"
#include "qctx/spectral.hpp"

namespace qctx {

enum class Handle { B, C };

inline std::string to_string(Handle h) { return h == Handle::B ? "B" : "C"; }

struct Apparatus {
  PDI primary;
  std::map<Handle, PDI> secondary;
  Handle handle = Handle::B;
  // Pointer position shown for each primary property; identity when the
  // apparatus is built correctly.
  std::vector<std::size_t> pointer_map;
};

inline Apparatus make_apparatus(const Scenario& s, const std::string& primary = "A",
                                const std::string& b = "B", const std::string& c = "C",
                                double tol = kDefaultCommuteTol) {
  Apparatus app;
  app.primary = spectral_decompose(s.observables[s.index_of(primary)].matrix);
  app.secondary[Handle::B] = spectral_decompose(s.observables[s.index_of(b)].matrix);
  app.secondary[Handle::C] = spectral_decompose(s.observables[s.index_of(c)].matrix);
  for (const auto& [h, pdi] : app.secondary) {
    for (const PdiBlock& p : app.primary.blocks)
      for (const PdiBlock& q : pdi.blocks)
        if (!commutes(p.projector.matrix, q.projector.matrix, tol)) {
          throw Incompatible(primary + " is not compatible with the handle-" + to_string(h) +
                             " observable");
        }
  }
  for (std::size_t j = 0; j < app.primary.blocks.size(); ++j) app.pointer_map.push_back(j);
  return app;
}

struct RunRecord {
  std::uint64_t seed = 0;
  Handle handle = Handle::B;
  std::size_t property = 0;
  std::size_t pointer1 = 0;
  std::size_t pointer2 = 0;
  std::vector<double> property_probs;     // Tr(rho P_j)
  std::vector<double> conditional_probs;  // Tr(rho P_j Q_k) / Tr(rho P_j) for the sampled j

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

namespace detail {

// First index whose cumulative probability exceeds u. Zero-probability
// entries are never returned.
inline std::size_t inverse_cdf(const std::vector<double>& probs, double u) {
  double cdf = 0.0;
  std::size_t last_nonzero = probs.size();
  for (std::size_t j = 0; j < probs.size(); ++j) {
    if (probs[j] <= 0.0) continue;
    cdf += probs[j];
    last_nonzero = j;
    if (u < cdf) return j;
  }
  if (last_nonzero == probs.size()) throw DegenerateDistribution("all probabilities are zero");
  return last_nonzero;
}

inline std::vector<double> block_probabilities(const DensityOperator& rho, const PDI& pdi,
                                               double tol) {
  std::vector<double> p;
  double total = 0.0;
  for (const PdiBlock& b : pdi.blocks) {
    double v = born_probability(rho, b.projector, tol);
    if (v <= tol) v = 0.0;
    p.push_back(v);
    total += v;
  }
  if (std::abs(total - 1.0) > tol * static_cast<double>(std::max<std::size_t>(1, pdi.dim))) {
    throw DegenerateDistribution("block probabilities sum to " + std::to_string(total));
  }
  return p;
}

inline RunRecord run_with(Xoshiro256& gen, std::uint64_t seed, const Scenario& s,
                          const Apparatus& app, Handle handle, double tol) {
  RunRecord rec;
  rec.seed = seed;
  rec.property_probs = block_probabilities(s.rho, app.primary, tol);
  const double u1 = gen.uniform();
  rec.property = inverse_cdf(rec.property_probs, u1);
  rec.pointer1 = app.pointer_map.at(rec.property);

  // The handle is consulted only after the property has been fixed.
  rec.handle = handle;
  const PDI& secondary = app.secondary.at(handle);
  const double u2 = gen.uniform();
  const double pj = rec.property_probs[rec.property];
  if (pj <= tol) throw ZeroConditional("sampled property has vanishing probability");
  const ComplexMatrix& pm = app.primary.blocks[rec.property].projector.matrix;
  for (const PdiBlock& q : secondary.blocks) {
    double v = trace_of_product(s.rho.matrix(), symmetrized_product(pm, q.projector.matrix)) / pj;
    if (v <= tol) v = 0.0;
    rec.conditional_probs.push_back(v);
  }
  rec.pointer2 = inverse_cdf(rec.conditional_probs, u2);
  return rec;
}

}  // namespace detail

// Inverse-CDF choice of a PDI block for u in [0, 1).
inline std::size_t sample_property(const DensityOperator& rho, const PDI& pdi, double u,
                                   double tol = kDefaultProbabilityTol) {
  if (!(u >= 0.0 && u < 1.0)) throw OutOfRange("u must lie in [0, 1)");
  return detail::inverse_cdf(detail::block_probabilities(rho, pdi, tol), u);
}

inline RunRecord run_experiment(const Scenario& s, const Apparatus& app, std::uint64_t seed,
                                double tol = kDefaultProbabilityTol) {
  Xoshiro256 gen(seed);
  return detail::run_with(gen, seed, s, app, app.handle, tol);
}

inline std::pair<RunRecord, RunRecord> counterfactual_pair(const Scenario& s, const Apparatus& app,
                                                           std::uint64_t seed,
                                                           double tol = kDefaultProbabilityTol) {
  Xoshiro256 gen_b(seed), gen_c(seed);
  return {detail::run_with(gen_b, seed, s, app, Handle::B, tol),
          detail::run_with(gen_c, seed, s, app, Handle::C, tol)};
}

// Prepares rho = P_block / rank and checks the primary pointer lands on
// `block` in every run.
inline CheckReport calibrate(const Scenario& s, const Apparatus& app, std::size_t block,
                             std::size_t runs, std::uint64_t seed,
                             double tol = kDefaultProbabilityTol) {
  if (block >= app.primary.blocks.size()) throw OutOfRange("no such primary block");
  const Projector& p = app.primary.blocks[block].projector;
  ComplexMatrix rho = p.matrix;
  rho *= 1.0 / static_cast<double>(p.rank);
  const Scenario prepared = with_state(s, rho);
  for (std::size_t i = 0; i < runs; ++i) {
    const RunRecord rec = run_experiment(prepared, app, run_seed(seed, i), tol);
    if (rec.pointer1 != block) throw CalibrationFailure(i + 1, block, rec.pointer1);
  }
  CheckReport report;
  report.add("pointer_matches_block_" + std::to_string(block), 0.0, 0.0);
  return report;
}

// A calibrated apparatus reports property j at pointer position j.
inline std::size_t infer_property(const RunRecord& r) { return r.pointer1; }

struct TwoApparatusRecord {
  std::uint64_t seed = 0;
  RunRecord particle1;  // {A,B} apparatus
  RunRecord particle2;  // {A,C} apparatus
};

// Two identically prepared particles measured at once, one per apparatus,
// drawing from two independent streams (the second is the first jumped).
inline TwoApparatusRecord two_apparatus_run(const Scenario& s, const Apparatus& app,
                                            std::uint64_t seed,
                                            double tol = kDefaultProbabilityTol) {
  Xoshiro256 g1(seed);
  Xoshiro256 g2 = g1;
  g2.jump();
  return {seed, detail::run_with(g1, seed, s, app, Handle::B, tol),
          detail::run_with(g2, seed, s, app, Handle::C, tol)};
}

inline std::vector<RunRecord> simulate_batch(const Scenario& s, const Apparatus& app,
                                             std::size_t runs, std::uint64_t seed,
                                             double tol = kDefaultProbabilityTol) {
  std::vector<RunRecord> out;
  out.reserve(runs);
  for (std::size_t i = 0; i < runs; ++i) out.push_back(run_experiment(s, app, run_seed(seed, i), tol));
  return out;
}

struct FrequencyCell {
  std::size_t count = 0;
  double frequency = 0.0;
};

struct FrequencyTable {
  std::map<std::vector<std::size_t>, FrequencyCell> cells;  // keyed by pointer positions
  std::size_t total = 0;

  std::size_t count(const std::vector<std::size_t>& key) const {
    auto it = cells.find(key);
    return it == cells.end() ? 0 : it->second.count;
  }
  double frequency(const std::vector<std::size_t>& key) const {
    auto it = cells.find(key);
    return it == cells.end() ? 0.0 : it->second.frequency;
  }
};

inline FrequencyTable tally(const std::vector<std::vector<std::size_t>>& keys) {
  if (keys.empty()) throw EmptyInput("no records to tally");
  FrequencyTable t;
  t.total = keys.size();
  for (const auto& k : keys) ++t.cells[k].count;
  for (auto& [_, cell] : t.cells)
    cell.frequency = static_cast<double>(cell.count) / static_cast<double>(t.total);
  return t;
}

// Counts of (primary pointer, secondary pointer).
inline FrequencyTable empirical_frequencies(const std::vector<RunRecord>& records) {
  if (records.empty()) throw EmptyInput("no records to tally");
  std::vector<std::vector<std::size_t>> keys;
  keys.reserve(records.size());
  for (const RunRecord& r : records) {
    if (r.handle != records.front().handle) throw MixedHandles("records mix handle settings");
    keys.push_back({r.pointer1, r.pointer2});
  }
  return tally(keys);
}

// Counts of (a1, b, a2, c) pointer positions.
inline FrequencyTable joint_frequencies(const std::vector<TwoApparatusRecord>& records) {
  std::vector<std::vector<std::size_t>> keys;
  keys.reserve(records.size());
  for (const TwoApparatusRecord& r : records)
    keys.push_back({r.particle1.pointer1, r.particle1.pointer2, r.particle2.pointer1,
                    r.particle2.pointer2});
  return tally(keys);
}

// One JSON-lines log entry: {seed, handle, property, pointer1, pointer2}.
inline std::string to_json_line(const RunRecord& r) {
  nlohmann::ordered_json j;
  j["seed"] = r.seed;
  j["handle"] = to_string(r.handle);
  j["property"] = r.property;
  j["pointer1"] = r.pointer1;
  j["pointer2"] = r.pointer2;
  return j.dump();
}

}  // namespace qctx
