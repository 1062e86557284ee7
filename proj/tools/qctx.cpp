// qctx: contextuality analysis and measurement simulation from the command line.
//
// Exit codes: 0 ok / globally noncontextual, 3 globally contextual (no global
// distribution), 1 runtime error, 2 bad command-line usage.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qctx/contexts.hpp"
#include "qctx/globalfit.hpp"
#include "qctx/report.hpp"
#include "qctx/scenario.hpp"
#include "qctx/scenario_io.hpp"
#include "qctx/simulator.hpp"

namespace {

using namespace qctx;
using ojson = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitUsage = 2;
constexpr int kExitContextual = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string path;
  std::string builtin;
  double p = 1.0 / 3.0;
  std::string state = "singlet";
  std::string angles;
  bool json = false;
  double tol = kDefaultFeasibilityTol;
  bool exact = false;
  std::uint64_t seed = 0;

  // range
  std::string cell;
  std::string sweep;
  // simulate
  std::string handle = "B";
  std::size_t runs = 10000;
  std::string log;
  std::string roles = "A,B,C";
  // validate
  bool print = false;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

double parse_double(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw UsageError("cannot read " + what + " from '" + text + "'");
  }
}

struct Loaded {
  Scenario scenario;
  std::vector<std::string> notes;
};

Loaded load(const Options& o) {
  if (!o.path.empty() && !o.builtin.empty()) {
    throw UsageError("give either a scenario file or --builtin, not both");
  }
  if (o.path.empty() && o.builtin.empty()) throw UsageError("no scenario: give a file or --builtin");
  if (!o.path.empty()) {
    std::ifstream in(o.path, std::ios::binary);
    if (!in) throw Error("cannot open scenario file '" + o.path + "'");
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return {parse_scenario(text), {}};
  }
  if (o.builtin == "abc") return {builtin_abc(o.p), {}};
  const ChshState state = o.state == "singlet" ? ChshState::singlet : ChshState::product00;
  if (o.angles.empty()) {
    return {builtin_chsh(state),
            {"chsh angles default to the Tsirelson configuration (0, pi/2, 3pi/4, pi/4); "
             "this is a tool default, not input data"}};
  }
  const auto parts = split(o.angles, ',');
  if (parts.size() != 4) throw UsageError("--angles needs four comma-separated values");
  std::array<double, 4> angles{};
  for (std::size_t k = 0; k < 4; ++k) angles[k] = parse_double(parts[k], "angle");
  return {builtin_chsh(state, angles), {}};
}

std::size_t find_label(const Scenario& s, const std::string& label) {
  for (std::size_t i = 0; i < s.observables.size(); ++i)
    if (s.observables[i].label == label) return i;
  std::size_t found = s.observables.size();
  for (std::size_t i = 0; i < s.observables.size(); ++i) {
    if (lower(s.observables[i].label) != lower(label)) continue;
    if (found != s.observables.size()) throw UnknownCell("label '" + label + "' is ambiguous");
    found = i;
  }
  if (found == s.observables.size()) throw UnknownCell("no observable labelled '" + label + "'");
  return found;
}

// "a=1,b=1,c=-1": labels matched case-insensitively; unnamed observables are
// summed over.
std::vector<std::optional<double>> parse_cell(const Scenario& s, const std::string& spec) {
  std::vector<std::optional<double>> cell(s.observables.size());
  for (const std::string& item : split(spec, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UnknownCell("cell entry '" + item + "' is not label=value");
    const std::size_t idx = find_label(s, item.substr(0, eq));
    if (cell[idx]) throw UnknownCell("observable '" + s.observables[idx].label + "' given twice");
    try {
      cell[idx] = parse_double(item.substr(eq + 1), "cell value");
    } catch (const UsageError& e) {
      throw UnknownCell(e.what());
    }
  }
  return cell;
}

struct Analysis {
  EmpiricalModel model;
  LPSystem lp;
  FeasibilityResult result;
};

Analysis analyze_scenario(const Scenario& s, const Options& o) {
  Analysis a{build_empirical_model(s, o.tol), {}, {}};
  a.lp = assemble_lp(a.model);
  a.result = solve_feasibility(a.lp, o.tol, o.exact);
  return a;
}

int cmd_analyze(const Options& o) {
  const Loaded in = load(o);
  const Analysis a = analyze_scenario(in.scenario, o);
  Report rep = build_report(a.model, a.lp, a.result, o.tol, o.exact);
  rep.notes = in.notes;
  if (o.json) {
    std::cout << serialize_report(rep) << "\n";
  } else {
    std::cout << render_text(rep);
  }
  return a.result.verdict == Verdict::globally_contextual ? kExitContextual : kExitOk;
}

int cmd_range(const Options& o) {
  if (!o.sweep.empty()) {
    const auto eq = o.sweep.find('=');
    if (eq == std::string::npos || o.sweep.substr(0, eq) != "p") {
      throw UsageError("--sweep expects p=start:stop:step");
    }
    if (o.builtin != "abc") throw UsageError("--sweep p=... needs --builtin abc");
    const auto parts = split(o.sweep.substr(eq + 1), ':');
    if (parts.size() != 3) throw UsageError("--sweep expects p=start:stop:step");
    const double lo = parse_double(parts[0], "sweep start");
    const double hi = parse_double(parts[1], "sweep stop");
    const double step = parse_double(parts[2], "sweep step");
    if (!(step > 0.0) || hi < lo) throw UsageError("--sweep needs stop >= start and step > 0");
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;

    int rc = kExitOk;
    std::cout << "p,min,max\n";
    for (std::size_t i = 0; i < count; ++i) {
      const double p = std::min(hi, lo + static_cast<double>(i) * step);
      Options at = o;
      at.p = p;
      const Scenario s = load(at).scenario;
      const Analysis a{build_empirical_model(s, o.tol), {}, {}};
      const LPSystem lp = assemble_lp(a.model);
      const auto cells = lp.select_cells(parse_cell(s, o.cell));
      try {
        const auto [mn, mx] = cells_range(lp, cells, o.tol, o.exact);
        std::cout << format_number(p) << ',' << format_number(mn) << ',' << format_number(mx) << "\n";
      } catch (const InfeasibleSystem&) {
        std::cout << format_number(p) << ",nan,nan\n";
        rc = kExitContextual;
      }
    }
    return rc;
  }

  const Loaded in = load(o);
  const Analysis a{build_empirical_model(in.scenario, o.tol), {}, {}};
  const LPSystem lp = assemble_lp(a.model);
  const auto cell = parse_cell(in.scenario, o.cell);
  const auto cells = lp.select_cells(cell);
  std::pair<double, double> range;
  try {
    range = cells_range(lp, cells, o.tol, o.exact);
  } catch (const InfeasibleSystem&) {
    if (o.json) {
      std::cout << ojson{{"scenario", in.scenario.name}, {"verdict", "GloballyContextual"},
                         {"message", "no global distribution"}}
                       .dump(2)
                << "\n";
    } else {
      std::cout << "no global distribution: " << in.scenario.name << " is globally contextual\n";
    }
    return kExitContextual;
  }
  if (o.json) {
    ojson c = ojson::object();
    for (std::size_t k = 0; k < cell.size(); ++k)
      if (cell[k]) c[in.scenario.observables[k].label] = *cell[k];
    std::cout << ojson{{"scenario", in.scenario.name}, {"cell", c}, {"min", range.first},
                       {"max", range.second}}
                     .dump(2)
              << "\n";
  } else {
    std::cout << format_number(range.first) << ' ' << format_number(range.second) << "\n";
  }
  return kExitOk;
}

// ---- simulate ------------------------------------------------------------

struct TableRow {
  std::vector<double> outcome;
  std::size_t count = 0;
  double frequency = 0.0;
  double born = 0.0;
};

std::vector<TableRow> pair_table(const Scenario& s, const Apparatus& app, Handle h,
                                 const FrequencyTable& f) {
  const PDI& sec = app.secondary.at(h);
  std::vector<TableRow> rows;
  for (std::size_t j = 0; j < app.primary.blocks.size(); ++j) {
    for (std::size_t k = 0; k < sec.blocks.size(); ++k) {
      const ComplexMatrix pq =
          symmetrized_product(app.primary.blocks[j].projector.matrix, sec.blocks[k].projector.matrix);
      const double born = std::max(0.0, trace_of_product(s.rho.matrix(), pq));
      rows.push_back({{app.primary.blocks[j].eigenvalue(), sec.blocks[k].eigenvalue()},
                      f.count({j, k}), f.frequency({j, k}), born});
    }
  }
  return rows;
}

std::vector<TableRow> product_table(const Scenario& s, const Apparatus& app, const FrequencyTable& f) {
  // Born tables of the two apparatuses; their counts are not used here.
  const std::vector<TableRow> born_b = pair_table(s, app, Handle::B, FrequencyTable{});
  const std::vector<TableRow> born_c = pair_table(s, app, Handle::C, FrequencyTable{});
  const std::size_t nb = app.secondary.at(Handle::B).blocks.size();
  const std::size_t nc = app.secondary.at(Handle::C).blocks.size();
  const std::size_t na = app.primary.blocks.size();
  std::vector<TableRow> rows;
  for (std::size_t j1 = 0; j1 < na; ++j1)
    for (std::size_t k = 0; k < nb; ++k)
      for (std::size_t j2 = 0; j2 < na; ++j2)
        for (std::size_t l = 0; l < nc; ++l) {
          const TableRow& b = born_b[j1 * nb + k];
          const TableRow& c = born_c[j2 * nc + l];
          rows.push_back({{b.outcome[0], b.outcome[1], c.outcome[0], c.outcome[1]},
                          f.count({j1, k, j2, l}), f.frequency({j1, k, j2, l}), b.born * c.born});
        }
  return rows;
}

ojson rows_to_json(const std::vector<TableRow>& rows) {
  ojson a = ojson::array();
  for (const TableRow& r : rows)
    a.push_back({{"outcome", r.outcome}, {"count", r.count}, {"frequency", r.frequency}, {"born", r.born}});
  return a;
}

void print_rows(std::ostream& out, const std::vector<std::string>& labels,
                const std::vector<TableRow>& rows) {
  for (const std::string& l : labels) out << l << ' ';
  out << "count frequency born\n";
  for (const TableRow& r : rows) {
    for (double v : r.outcome) out << format_number(v) << ' ';
    out << r.count << ' ' << format_number(r.frequency) << ' ' << format_number(r.born) << "\n";
  }
}

int cmd_simulate(const Options& o) {
  const Loaded in = load(o);
  const Scenario& s = in.scenario;
  const auto roles = split(o.roles, ',');
  if (roles.size() != 3) throw UsageError("--observables needs three labels: primary,handleB,handleC");
  const std::string la = s.observables[find_label(s, roles[0])].label;
  const std::string lb = s.observables[find_label(s, roles[1])].label;
  const std::string lc = s.observables[find_label(s, roles[2])].label;
  const Apparatus app = make_apparatus(s, la, lb, lc);

  std::ofstream log;
  if (!o.log.empty()) {
    log.open(o.log, std::ios::binary | std::ios::trunc);
    if (!log) throw Error("cannot open log file '" + o.log + "'");
  }
  auto emit = [&](const RunRecord& r) {
    if (log.is_open()) log << to_json_line(r) << "\n";
  };

  ojson j;
  j["scenario"] = s.name;
  j["handle"] = o.handle;
  j["runs"] = o.runs;
  j["seed"] = o.seed;
  std::ostringstream text;
  text << "scenario: " << s.name << "\nhandle: " << o.handle << "\nruns: " << o.runs
       << "\nseed: " << o.seed << "\n";

  if (o.handle == "B" || o.handle == "C") {
    Apparatus set = app;
    set.handle = o.handle == "B" ? Handle::B : Handle::C;
    std::vector<RunRecord> records;
    records.reserve(o.runs);
    for (std::size_t i = 0; i < o.runs; ++i) {
      records.push_back(run_experiment(s, set, run_seed(o.seed, i), o.tol));
      emit(records.back());
    }
    const auto rows = pair_table(s, set, set.handle, empirical_frequencies(records));
    const std::vector<std::string> labels{la, set.handle == Handle::B ? lb : lc};
    j["labels"] = labels;
    j["cells"] = rows_to_json(rows);
    print_rows(text, labels, rows);
  } else if (o.handle == "pair") {
    std::vector<RunRecord> at_b, at_c;
    std::size_t agree = 0, secondary_differs = 0;
    for (std::size_t i = 0; i < o.runs; ++i) {
      auto [rb, rc] = counterfactual_pair(s, app, run_seed(o.seed, i), o.tol);
      agree += rb.pointer1 == rc.pointer1;
      secondary_differs += rb.pointer2 != rc.pointer2;
      emit(rb);
      emit(rc);
      at_b.push_back(std::move(rb));
      at_c.push_back(std::move(rc));
    }
    const double n = static_cast<double>(o.runs);
    const auto rows_b = pair_table(s, app, Handle::B, empirical_frequencies(at_b));
    const auto rows_c = pair_table(s, app, Handle::C, empirical_frequencies(at_c));
    j["primary_agreement"] = static_cast<double>(agree) / n;
    j["secondary_index_differs"] = static_cast<double>(secondary_differs) / n;
    j["labels_B"] = std::vector<std::string>{la, lb};
    j["cells_B"] = rows_to_json(rows_b);
    j["labels_C"] = std::vector<std::string>{la, lc};
    j["cells_C"] = rows_to_json(rows_c);
    text << "primary agreement: " << format_number(static_cast<double>(agree) / n) << "\n";
    text << "secondary index differs: " << format_number(static_cast<double>(secondary_differs) / n)
         << "\n";
    text << "handle B:\n";
    print_rows(text, {la, lb}, rows_b);
    text << "handle C:\n";
    print_rows(text, {la, lc}, rows_c);
  } else {
    std::vector<TwoApparatusRecord> records;
    records.reserve(o.runs);
    for (std::size_t i = 0; i < o.runs; ++i) {
      records.push_back(two_apparatus_run(s, app, run_seed(o.seed, i), o.tol));
      emit(records.back().particle1);
      emit(records.back().particle2);
    }
    const auto rows = product_table(s, app, joint_frequencies(records));
    // Pearson correlation of the two primary outcomes.
    double m1 = 0, m2 = 0, m11 = 0, m22 = 0, m12 = 0;
    for (const TwoApparatusRecord& r : records) {
      const double a1 = app.primary.blocks[r.particle1.pointer1].eigenvalue();
      const double a2 = app.primary.blocks[r.particle2.pointer1].eigenvalue();
      m1 += a1, m2 += a2, m11 += a1 * a1, m22 += a2 * a2, m12 += a1 * a2;
    }
    const double n = static_cast<double>(records.size());
    m1 /= n, m2 /= n, m11 /= n, m22 /= n, m12 /= n;
    const double var = (m11 - m1 * m1) * (m22 - m2 * m2);
    const double corr = var > 0 ? (m12 - m1 * m2) / std::sqrt(var) : 0.0;
    const std::vector<std::string> labels{la + "1", lb, la + "2", lc};
    j["labels"] = labels;
    j["cells"] = rows_to_json(rows);
    j["primary_correlation"] = corr;
    print_rows(text, labels, rows);
    text << "primary correlation: " << format_number(corr) << "\n";
  }

  if (o.json) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << text.str();
  }
  return kExitOk;
}

int cmd_validate(const Options& o) {
  const Loaded in = load(o);
  const Scenario& s = in.scenario;
  if (o.print) {
    std::cout << serialize_scenario(s) << "\n";
    return kExitOk;
  }
  const std::vector<PDI> pdis = observable_pdis(s);
  bool ok = true;
  ojson obs = ojson::array();
  std::ostringstream text;
  text << "scenario: " << s.name << "\ndim: " << s.dim << "\n";
  for (std::size_t i = 0; i < pdis.size(); ++i) {
    const CheckReport rep = validate_pdi(pdis[i]);
    ok = ok && rep.passed();
    std::vector<std::size_t> ranks;
    for (const PdiBlock& b : pdis[i].blocks) ranks.push_back(b.projector.rank);
    obs.push_back({{"label", s.observables[i].label},
                   {"eigenvalues", pdis[i].eigenvalues()},
                   {"ranks", ranks},
                   {"pdi_valid", rep.passed()},
                   {"max_residual", rep.max_residual()}});
    text << "observable " << s.observables[i].label << ": eigenvalues";
    for (std::size_t b = 0; b < pdis[i].blocks.size(); ++b)
      text << ' ' << format_number(pdis[i].blocks[b].eigenvalue()) << " (rank " << ranks[b] << ")";
    text << (rep.passed() ? "" : "  PDI CHECK FAILED") << "\n";
  }
  std::vector<std::string> edges;
  for (const auto& [a, b] : compatibility_graph(s))
    edges.push_back(s.observables[a].label + "~" + s.observables[b].label);
  text << "compatible pairs:";
  for (const std::string& e : edges) text << ' ' << e;
  text << "\nstatus: " << (ok ? "ok" : "invalid") << "\n";
  for (const std::string& n : in.notes) text << "note: " << n << "\n";
  if (o.json) {
    ojson j{{"scenario", s.name}, {"dim", s.dim}, {"observables", obs}, {"compatible_pairs", edges},
            {"valid", ok}};
    if (!in.notes.empty()) j["notes"] = in.notes;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << text.str();
  }
  return ok ? kExitOk : kExitError;
}

void add_source(CLI::App* cmd, Options& o) {
  cmd->add_option("scenario", o.path, "Scenario JSON file");
  cmd->add_option("--builtin", o.builtin, "Built-in scenario")->check(CLI::IsMember({"abc", "chsh"}));
  cmd->add_option("--p", o.p, "Weight p of the abc state diag(p, r, r), r = (1-p)/2")
      ->capture_default_str();
  cmd->add_option("--state", o.state, "chsh state")
      ->check(CLI::IsMember({"singlet", "product00"}))
      ->capture_default_str();
  cmd->add_option("--angles", o.angles, "chsh measurement angles t1,t2,t3,t4 (radians)");
  cmd->add_flag("--json", o.json, "Machine-readable JSON output");
  cmd->add_option("--tol", o.tol, "Probability and feasibility tolerance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_flag("--exact", o.exact, "Solve the linear program in exact rational arithmetic");
  cmd->add_option("--seed", o.seed, "Random seed")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contextuality analysis of quantum empirical models"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  Options o;

  auto* analyze = app.add_subcommand("analyze", "Build the empirical model and decide global contextuality");
  add_source(analyze, o);

  auto* range = app.add_subcommand("range", "Range of a global-table cell over all global distributions");
  add_source(range, o);
  range->add_option("--cell", o.cell, "Cell such as a=1,b=1,c=-1 (omitted observables are summed)")
      ->required();
  range->add_option("--sweep", o.sweep, "Sweep p=start:stop:step over the abc scenario (CSV output)");

  auto* simulate = app.add_subcommand("simulate", "Run the stochastic measurement simulator");
  add_source(simulate, o);
  simulate->add_option("--handle", o.handle, "B, C, pair (counterfactual) or two-apparatus")
      ->check(CLI::IsMember({"B", "C", "pair", "two-apparatus"}))
      ->capture_default_str();
  simulate->add_option("--runs", o.runs, "Number of runs")->check(CLI::PositiveNumber)->capture_default_str();
  simulate->add_option("--log", o.log, "Write one JSON line per run record to FILE");
  simulate->add_option("--observables", o.roles, "Primary, handle-B and handle-C observable labels")
      ->capture_default_str();

  auto* validate = app.add_subcommand("validate", "Check a scenario and its projective decompositions");
  add_source(validate, o);
  validate->add_flag("--print", o.print, "Print the scenario as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (analyze->parsed()) return cmd_analyze(o);
    if (range->parsed()) return cmd_range(o);
    if (simulate->parsed()) return cmd_simulate(o);
    return cmd_validate(o);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
}
