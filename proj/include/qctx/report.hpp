#pragma once

// Analysis report: everything `qctx analyze` prints, in a form that
// serializes to JSON and parses back to an equal value.

#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qctx/check_report.hpp"
#include "qctx/contexts.hpp"
#include "qctx/errors.hpp"
#include "qctx/globalfit.hpp"

namespace qctx {

inline constexpr const char* kToolVersion = "0.1.0";

struct TableEntry {
  std::vector<double> outcome;
  double probability = 0.0;

  friend bool operator==(const TableEntry&, const TableEntry&) = default;
};

struct ContextTable {
  std::string context;
  std::vector<std::string> labels;
  std::vector<TableEntry> entries;

  friend bool operator==(const ContextTable&, const ContextTable&) = default;
};

struct WitnessTerm {
  std::string context;
  std::vector<double> outcome;
  double weight = 0.0;

  friend bool operator==(const WitnessTerm&, const WitnessTerm&) = default;
};

struct CorrelatorReport {
  std::vector<std::string> contexts;
  std::vector<int> signs;
  std::vector<double> correlators;
  double value = 0.0;

  friend bool operator==(const CorrelatorReport&, const CorrelatorReport&) = default;
};

struct WitnessReport {
  std::vector<WitnessTerm> terms;
  double bound = 0.0;
  double violation = 0.0;
  std::optional<CorrelatorReport> correlator;

  friend bool operator==(const WitnessReport&, const WitnessReport&) = default;
};

struct GlobalTableReport {
  std::vector<std::string> labels;
  std::vector<TableEntry> cells;
  bool quantum_sample_space = false;

  friend bool operator==(const GlobalTableReport&, const GlobalTableReport&) = default;
};

struct RangeEntry {
  std::vector<std::string> labels;
  std::vector<std::optional<double>> cell;  // nullopt: summed over that observable
  double min = 0.0;
  double max = 0.0;

  friend bool operator==(const RangeEntry&, const RangeEntry&) = default;
};

struct Report {
  std::string tool_version = kToolVersion;
  std::string scenario;
  std::vector<std::string> observables;
  double tolerance = kDefaultFeasibilityTol;
  bool exact = false;
  std::vector<ContextTable> contexts;
  CheckReport compatibility;
  Verdict verdict = Verdict::globally_noncontextual;
  std::optional<GlobalTableReport> global_table;
  std::optional<WitnessReport> witness;
  std::vector<RangeEntry> ranges;
  std::vector<std::string> notes;

  friend bool operator==(const Report&, const Report&) = default;
};

inline Report build_report(const EmpiricalModel& m, const LPSystem& lp, const FeasibilityResult& r,
                           double tol, bool exact) {
  Report rep;
  rep.scenario = m.scenario.name;
  rep.observables = m.scenario.labels();
  rep.tolerance = tol;
  rep.exact = exact;
  for (const ContextDistribution& d : m.contexts) {
    ContextTable t;
    t.context = context_name(m.scenario, d.context);
    for (std::size_t i : d.context.members) t.labels.push_back(m.scenario.observables[i].label);
    for (std::size_t k = 0; k < d.outcomes.size(); ++k) t.entries.push_back({d.outcomes[k], d.probs[k]});
    rep.contexts.push_back(std::move(t));
  }
  rep.compatibility = m.compatibility;
  rep.verdict = r.verdict;
  if (r.table) {
    GlobalTableReport g;
    for (const ObservableAxis& a : r.table->axes) g.labels.push_back(a.label);
    for (std::size_t c = 0; c < r.table->cells.size(); ++c)
      g.cells.push_back({lp.cell_outcome(c), r.table->cells[c]});
    g.quantum_sample_space = r.table->quantum_sample_space;
    rep.global_table = std::move(g);
  }
  if (r.witness) {
    WitnessReport w;
    for (std::size_t i = 0; i < lp.rows.size(); ++i)
      w.terms.push_back({lp.context_names[lp.rows[i].context], lp.rows[i].outcome, r.witness->weights[i]});
    w.bound = r.witness->bound;
    w.violation = r.witness->violation;
    if (r.witness->correlator) {
      CorrelatorReport c;
      c.contexts = lp.context_names;
      c.signs = r.witness->correlator->signs;
      c.correlators = r.witness->correlator->correlators;
      c.value = r.witness->correlator->value;
      w.correlator = std::move(c);
    }
    rep.witness = std::move(w);
  }
  return rep;
}

// ---- JSON ----------------------------------------------------------------

namespace detail {

using ojson = nlohmann::ordered_json;

inline ojson entries_to_json(const std::vector<TableEntry>& entries) {
  ojson a = ojson::array();
  for (const TableEntry& e : entries) a.push_back({{"outcome", e.outcome}, {"probability", e.probability}});
  return a;
}

inline std::vector<TableEntry> entries_from_json(const ojson& a) {
  std::vector<TableEntry> out;
  for (const auto& e : a)
    out.push_back({e.at("outcome").get<std::vector<double>>(), e.at("probability").get<double>()});
  return out;
}

}  // namespace detail

inline nlohmann::ordered_json report_to_json(const Report& r) {
  using detail::ojson;
  ojson j;
  j["tool_version"] = r.tool_version;
  j["scenario"] = r.scenario;
  j["observables"] = r.observables;
  j["tolerance"] = r.tolerance;
  j["exact"] = r.exact;
  j["contexts"] = ojson::array();
  for (const ContextTable& t : r.contexts) {
    j["contexts"].push_back(
        {{"context", t.context}, {"labels", t.labels}, {"table", detail::entries_to_json(t.entries)}});
  }
  ojson compat = ojson::array();
  for (const Check& c : r.compatibility.checks)
    compat.push_back({{"pair", c.name}, {"passed", c.passed}, {"discrepancy", c.residual}});
  j["compatibility"] = compat;
  j["verdict"] = to_string(r.verdict);
  if (r.global_table) {
    j["global_table"] = {{"labels", r.global_table->labels},
                         {"quantum_sample_space", r.global_table->quantum_sample_space},
                         {"cells", detail::entries_to_json(r.global_table->cells)}};
  }
  if (r.witness) {
    ojson w;
    w["bound"] = r.witness->bound;
    w["violation"] = r.witness->violation;
    w["terms"] = ojson::array();
    for (const WitnessTerm& t : r.witness->terms)
      w["terms"].push_back({{"context", t.context}, {"outcome", t.outcome}, {"weight", t.weight}});
    if (r.witness->correlator) {
      const CorrelatorReport& c = *r.witness->correlator;
      w["correlator_form"] = {{"contexts", c.contexts},
                              {"signs", c.signs},
                              {"correlators", c.correlators},
                              {"value", c.value}};
    }
    j["witness"] = w;
  }
  if (!r.ranges.empty()) {
    j["ranges"] = ojson::array();
    for (const RangeEntry& e : r.ranges) {
      ojson cell = ojson::object();
      for (std::size_t k = 0; k < e.labels.size(); ++k)
        cell[e.labels[k]] = e.cell[k] ? ojson(*e.cell[k]) : ojson(nullptr);
      j["ranges"].push_back({{"cell", cell}, {"min", e.min}, {"max", e.max}});
    }
  }
  if (!r.notes.empty()) j["notes"] = r.notes;
  return j;
}

inline std::string serialize_report(const Report& r, int indent = 2) {
  return report_to_json(r).dump(indent);
}

inline Report parse_report(std::string_view text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what(), 0, e.byte);
  }
  try {
    Report r;
    r.tool_version = j.at("tool_version").get<std::string>();
    r.scenario = j.at("scenario").get<std::string>();
    r.observables = j.at("observables").get<std::vector<std::string>>();
    r.tolerance = j.at("tolerance").get<double>();
    r.exact = j.at("exact").get<bool>();
    for (const auto& t : j.at("contexts")) {
      r.contexts.push_back({t.at("context").get<std::string>(),
                            t.at("labels").get<std::vector<std::string>>(),
                            detail::entries_from_json(t.at("table"))});
    }
    for (const auto& c : j.at("compatibility")) {
      r.compatibility.checks.push_back(
          {c.at("pair").get<std::string>(), c.at("passed").get<bool>(), c.at("discrepancy").get<double>()});
    }
    const std::string verdict = j.at("verdict").get<std::string>();
    if (verdict == to_string(Verdict::globally_noncontextual)) {
      r.verdict = Verdict::globally_noncontextual;
    } else if (verdict == to_string(Verdict::globally_contextual)) {
      r.verdict = Verdict::globally_contextual;
    } else {
      throw ValidationError("verdict", "unknown verdict " + verdict);
    }
    if (j.contains("global_table")) {
      const auto& g = j["global_table"];
      r.global_table = GlobalTableReport{g.at("labels").get<std::vector<std::string>>(),
                                         detail::entries_from_json(g.at("cells")),
                                         g.at("quantum_sample_space").get<bool>()};
    }
    if (j.contains("witness")) {
      const auto& w = j["witness"];
      WitnessReport wr;
      wr.bound = w.at("bound").get<double>();
      wr.violation = w.at("violation").get<double>();
      for (const auto& t : w.at("terms")) {
        wr.terms.push_back({t.at("context").get<std::string>(), t.at("outcome").get<std::vector<double>>(),
                            t.at("weight").get<double>()});
      }
      if (w.contains("correlator_form")) {
        const auto& c = w["correlator_form"];
        wr.correlator = CorrelatorReport{c.at("contexts").get<std::vector<std::string>>(),
                                         c.at("signs").get<std::vector<int>>(),
                                         c.at("correlators").get<std::vector<double>>(),
                                         c.at("value").get<double>()};
      }
      r.witness = std::move(wr);
    }
    if (j.contains("ranges")) {
      for (const auto& e : j["ranges"]) {
        RangeEntry re;
        // Cell keys keep their serialized order.
        for (const auto& [label, v] : e.at("cell").items()) {
          re.labels.push_back(label);
          re.cell.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
        }
        re.min = e.at("min").get<double>();
        re.max = e.at("max").get<double>();
        r.ranges.push_back(std::move(re));
      }
    }
    if (j.contains("notes")) r.notes = j["notes"].get<std::vector<std::string>>();
    if (r.global_table.has_value() != (r.verdict == Verdict::globally_noncontextual) ||
        r.witness.has_value() != (r.verdict == Verdict::globally_contextual)) {
      throw ValidationError("verdict", "verdict does not match the table/witness present");
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("report", e.what());
  }
}

// ---- text ----------------------------------------------------------------

// Short deterministic rendering of a number ("%.6g", no negative zero).
inline std::string format_number(double v) {
  if (v == 0.0) v = 0.0;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string format_assignment(const std::vector<std::string>& labels,
                                     const std::vector<double>& outcome) {
  std::string s;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (k) s += ' ';
    s += labels[k] + "=" + format_number(outcome[k]);
  }
  return s;
}

inline std::string render_text(const Report& r) {
  std::ostringstream out;
  out << "scenario: " << r.scenario << "\n";
  out << "observables:";
  for (const std::string& l : r.observables) out << ' ' << l;
  out << "\n";
  out << "tolerance: " << format_number(r.tolerance) << (r.exact ? " (exact rational LP)" : "")
      << "\n";
  out << "contexts: " << r.contexts.size() << "\n";
  for (const ContextTable& t : r.contexts) {
    out << "  " << t.context << "\n";
    for (const TableEntry& e : t.entries)
      out << "    " << format_assignment(t.labels, e.outcome) << "  " << format_number(e.probability)
          << "\n";
  }
  out << "compatibility: " << (r.compatibility.passed() ? "pass" : "FAIL");
  out << " (max discrepancy " << format_number(r.compatibility.max_residual()) << ")\n";
  out << "verdict: " << to_string(r.verdict) << "\n";
  if (r.global_table) {
    out << "global table";
    if (!r.global_table->quantum_sample_space) out << " (classical construct, no quantum sample space)";
    out << ":\n";
    for (const TableEntry& e : r.global_table->cells) {
      if (e.probability == 0.0) continue;
      out << "  " << format_assignment(r.global_table->labels, e.outcome) << "  "
          << format_number(e.probability) << "\n";
    }
  }
  if (r.witness) {
    const WitnessReport& w = *r.witness;
    if (w.correlator) {
      const CorrelatorReport& c = *w.correlator;
      out << "witness: ";
      for (std::size_t k = 0; k < c.contexts.size(); ++k) {
        out << (c.signs[k] > 0 ? (k ? " + " : "") : (k ? " - " : "-")) << "E" << c.contexts[k];
      }
      out << " <= " << format_number(w.bound) << "\n";
      for (std::size_t k = 0; k < c.contexts.size(); ++k)
        out << "  E" << c.contexts[k] << " = " << format_number(c.correlators[k]) << "\n";
      out << "  value " << format_number(c.value) << ", violation " << format_number(w.violation)
          << "\n";
    } else {
      out << "witness: sum of weights <= " << format_number(w.bound) << ", violation "
          << format_number(w.violation) << "\n";
      for (const WitnessTerm& t : w.terms) {
        if (t.weight == 0.0) continue;
        out << "  " << t.context << " (";
        for (std::size_t k = 0; k < t.outcome.size(); ++k)
          out << (k ? "," : "") << format_number(t.outcome[k]);
        out << ")  " << format_number(t.weight) << "\n";
      }
    }
  }
  for (const RangeEntry& e : r.ranges) {
    out << "range";
    for (std::size_t k = 0; k < e.labels.size(); ++k)
      if (e.cell[k]) out << ' ' << e.labels[k] << '=' << format_number(*e.cell[k]);
    out << ": " << format_number(e.min) << ' ' << format_number(e.max) << "\n";
  }
  for (const std::string& n : r.notes) out << "note: " << n << "\n";
  return out.str();
}

}  // namespace qctx
