#pragma once

// JSON scenario files:
//   {"name": str, "dim": int,
//    "observables": [{"label": str, "matrix": [[[re, im], ...], ...]}],
//    "rho": [[[re, im], ...], ...]}
// Matrices are row-major dim x dim arrays of [re, im] pairs. Unknown keys are
// rejected.

#include <set>
#include <string>
#include <string_view>

#include <json.hpp>

#include "qctx/errors.hpp"
#include "qctx/linalg.hpp"
#include "qctx/scenario.hpp"

namespace qctx {

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                                const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ValidationError(where, "unknown key \"" + key + "\"");
  }
}

inline ComplexMatrix matrix_from_json(const nlohmann::json& j, std::size_t dim,
                                      const std::string& label) {
  if (!j.is_array() || j.size() != dim) {
    throw ValidationError(label, "matrix must have " + std::to_string(dim) + " rows");
  }
  std::vector<Complex> entries;
  entries.reserve(dim * dim);
  for (const auto& row : j) {
    if (!row.is_array() || row.size() != dim) {
      throw ValidationError(label, "matrix rows must have " + std::to_string(dim) + " entries");
    }
    for (const auto& z : row) {
      if (!z.is_array() || z.size() != 2 || !z[0].is_number() || !z[1].is_number()) {
        throw ValidationError(label, "entries must be [re, im] number pairs");
      }
      entries.emplace_back(z[0].get<double>(), z[1].get<double>());
    }
  }
  try {
    return ComplexMatrix(dim, std::move(entries));
  } catch (const Error& e) {
    throw ValidationError(label, e.what());
  }
}

inline nlohmann::ordered_json matrix_to_json(const ComplexMatrix& m) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < m.dim(); ++i) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < m.dim(); ++k) row.push_back({m(i, k).real(), m(i, k).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::pair<std::size_t, std::size_t> line_and_column(std::string_view text,
                                                           std::size_t byte) {
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

}  // namespace detail

inline Scenario parse_scenario(std::string_view text, double tol = kDefaultScenarioTol) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // nlohmann reports the byte *after* the offending character.
    const std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
    const auto [line, column] = detail::line_and_column(text, byte);
    throw ParseError("malformed scenario JSON", line, column);
  }
  if (!doc.is_object()) throw ValidationError("scenario", "top level must be an object");
  detail::reject_unknown_keys(doc, {"name", "dim", "observables", "rho"}, "scenario");
  for (const char* key : {"name", "dim", "observables", "rho"}) {
    if (!doc.contains(key)) throw ValidationError(key, "missing key");
  }
  if (!doc["name"].is_string()) throw ValidationError("name", "must be a string");
  if (!doc["dim"].is_number_integer() || doc["dim"].get<long long>() <= 0) {
    throw ValidationError("dim", "must be a positive integer");
  }
  const auto dim = static_cast<std::size_t>(doc["dim"].get<long long>());
  if (!doc["observables"].is_array()) throw ValidationError("observables", "must be an array");

  std::vector<Observable> observables;
  for (const auto& o : doc["observables"]) {
    if (!o.is_object()) throw ValidationError("observables", "entries must be objects");
    detail::reject_unknown_keys(o, {"label", "matrix"}, "observables");
    if (!o.contains("label") || !o["label"].is_string()) {
      throw ValidationError("observables", "entry needs a string label");
    }
    const std::string label = o["label"].get<std::string>();
    if (!o.contains("matrix")) throw ValidationError(label, "missing matrix");
    observables.push_back({label, detail::matrix_from_json(o["matrix"], dim, label)});
  }
  const ComplexMatrix rho = detail::matrix_from_json(doc["rho"], dim, "rho");
  return make_scenario(doc["name"].get<std::string>(), std::move(observables), rho, tol);
}

inline nlohmann::ordered_json scenario_to_json(const Scenario& s) {
  nlohmann::ordered_json doc;
  doc["name"] = s.name;
  doc["dim"] = s.dim;
  doc["observables"] = nlohmann::ordered_json::array();
  for (const Observable& o : s.observables) {
    nlohmann::ordered_json entry;
    entry["label"] = o.label;
    entry["matrix"] = detail::matrix_to_json(o.matrix);
    doc["observables"].push_back(std::move(entry));
  }
  doc["rho"] = detail::matrix_to_json(s.rho.matrix());
  return doc;
}

namespace detail {

// One matrix row per line: [[re, im], [re, im], ...].
inline std::string matrix_block(const ComplexMatrix& m, const std::string& pad) {
  std::string out = "[\n";
  for (std::size_t i = 0; i < m.dim(); ++i) {
    out += pad + "  [";
    for (std::size_t j = 0; j < m.dim(); ++j) {
      if (j) out += ", ";
      out += "[" + nlohmann::json(m(i, j).real()).dump() + ", " + nlohmann::json(m(i, j).imag()).dump() + "]";
    }
    out += i + 1 < m.dim() ? "],\n" : "]\n";
  }
  return out + pad + "]";
}

}  // namespace detail

// Human-diffable layout; the content equals scenario_to_json(s).
inline std::string serialize_scenario(const Scenario& s) {
  std::string out = "{\n";
  out += "  \"name\": " + nlohmann::json(s.name).dump() + ",\n";
  out += "  \"dim\": " + std::to_string(s.dim) + ",\n";
  out += "  \"observables\": [\n";
  for (std::size_t k = 0; k < s.observables.size(); ++k) {
    out += "    {\n      \"label\": " + nlohmann::json(s.observables[k].label).dump() + ",\n";
    out += "      \"matrix\": " + detail::matrix_block(s.observables[k].matrix, "      ") + "\n";
    out += k + 1 < s.observables.size() ? "    },\n" : "    }\n";
  }
  out += "  ],\n";
  out += "  \"rho\": " + detail::matrix_block(s.rho.matrix(), "  ") + "\n";
  return out + "}";
}

}  // namespace qctx
