#pragma once

// Classical frontend: problem files, algorithm selection, report rendering.

#include "qsolve/grover_sat.hpp"
#include "qsolve/qpe_tsp.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace qsolve::cli {

using nlohmann::json;

enum class ProblemType { sat, tsp };
enum class Algorithm { grover, qpe, automatic };
enum class OutputMode { text, json };

inline std::string to_string(ProblemType t) { return t == ProblemType::sat ? "sat" : "tsp"; }

inline std::string to_string(Algorithm a)
{
  switch (a) {
  case Algorithm::grover:
    return "grover";
  case Algorithm::qpe:
    return "qpe";
  case Algorithm::automatic:
    break;
  }
  return "auto";
}

inline Algorithm parse_algorithm(std::string_view name)
{
  if (name == "grover") {
    return Algorithm::grover;
  }
  if (name == "qpe") {
    return Algorithm::qpe;
  }
  if (name == "auto") {
    return Algorithm::automatic;
  }
  throw std::invalid_argument("unknown algorithm '" + std::string(name) +
                              "' (expected grover, qpe or auto)");
}

/// A problem file that failed to parse or validate. Each diagnostic names a
/// location: "line L, column C" for syntax errors, a JSON path otherwise.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& source, std::vector<std::string> diagnostics)
      : std::runtime_error(render(source, diagnostics)), diagnostics_(std::move(diagnostics))
  {
  }
  const std::vector<std::string>& diagnostics() const noexcept { return diagnostics_; }

private:
  static std::string render(const std::string& source, const std::vector<std::string>& diags)
  {
    std::string msg = source + ": invalid problem file";
    for (const auto& d : diags) {
      msg += "\n  " + d;
    }
    return msg;
  }
  std::vector<std::string> diagnostics_;
};

/// Requested algorithm incompatible with the problem class.
class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct ProblemFile {
  ProblemType type = ProblemType::sat;
  std::variant<sat::SatProblem, tsp::TspInstance> problem;

  const sat::SatProblem& sat() const { return std::get<sat::SatProblem>(problem); }
  const tsp::TspInstance& tsp() const { return std::get<tsp::TspInstance>(problem); }
};

namespace detail {

class Reader {
public:
  std::vector<std::string> diags;

  void error(const std::string& where, const std::string& what) { diags.push_back(where + ": " + what); }

  void only_keys(const json& obj, const std::string& where, std::set<std::string> allowed)
  {
    for (const auto& [key, _] : obj.items()) {
      if (!allowed.count(key)) {
        error(where, "unknown field '" + key + "'");
      }
    }
  }

  std::optional<std::uint64_t> unsigned_field(const json& obj, const std::string& key,
                                              const std::string& where)
  {
    if (!obj.contains(key)) {
      error(where, "missing field '" + key + "'");
      return std::nullopt;
    }
    return unsigned_value(obj.at(key), where + "." + key);
  }

  std::optional<std::uint64_t> unsigned_value(const json& v, const std::string& where)
  {
    if (!v.is_number_unsigned()) {
      error(where, "expected a non-negative integer, got " + v.dump());
      return std::nullopt;
    }
    return v.get<std::uint64_t>();
  }

  std::optional<std::string> string_value(const json& v, const std::string& where)
  {
    if (!v.is_string()) {
      error(where, "expected a string, got " + v.dump());
      return std::nullopt;
    }
    return v.get<std::string>();
  }
};

inline std::string line_column(std::string_view text, std::size_t byte)
{
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

inline sat::SatProblem read_sat(const json& doc, Reader& r)
{
  r.only_keys(doc, "$", {"type", "variables", "constraints"});
  sat::SatProblem p;
  if (!doc.contains("variables") || !doc.at("variables").is_array()) {
    r.error("$.variables", "expected an array of variables");
  } else {
    const auto& vars = doc.at("variables");
    for (std::size_t i = 0; i < vars.size(); ++i) {
      const auto where = "$.variables[" + std::to_string(i) + "]";
      const auto& v = vars[i];
      if (!v.is_object()) {
        r.error(where, "expected an object");
        continue;
      }
      r.only_keys(v, where, {"name", "bits"});
      std::optional<std::string> name;
      if (!v.contains("name")) {
        r.error(where, "missing field 'name'");
      } else {
        name = r.string_value(v.at("name"), where + ".name");
      }
      const auto bits = r.unsigned_field(v, "bits", where);
      if (name && bits) {
        p.vars.push_back({*name, static_cast<std::size_t>(*bits)});
      }
    }
  }

  if (!doc.contains("constraints") || !doc.at("constraints").is_array()) {
    r.error("$.constraints", "expected an array of constraints");
    return p;
  }
  const auto& cons = doc.at("constraints");
  for (std::size_t i = 0; i < cons.size(); ++i) {
    const auto where = "$.constraints[" + std::to_string(i) + "]";
    const auto& c = cons[i];
    if (!c.is_object()) {
      r.error(where, "expected an object");
      continue;
    }
    std::vector<std::string> args;
    bool args_ok = true;
    if (!c.contains("args") || !c.at("args").is_array()) {
      r.error(where, "expected 'args' to be an array of variable names");
      args_ok = false;
    } else {
      for (std::size_t k = 0; k < c.at("args").size(); ++k) {
        auto name = r.string_value(c.at("args")[k], where + ".args[" + std::to_string(k) + "]");
        args_ok = args_ok && name.has_value();
        if (name) {
          args.push_back(*name);
        }
      }
    }
    std::optional<std::string> kind;
    if (!c.contains("kind")) {
      r.error(where, "missing field 'kind'");
    } else {
      kind = r.string_value(c.at("kind"), where + ".kind");
    }
    if (!kind) {
      continue;
    }
    if (*kind == "not_equal") {
      r.only_keys(c, where, {"kind", "args"});
      if (args_ok && args.size() != 2) {
        r.error(where, "not_equal takes exactly 2 args, got " + std::to_string(args.size()));
      } else if (args_ok) {
        p.constraints.emplace_back(sat::NotEqual{args[0], args[1]});
      }
    } else if (*kind == "equal_const") {
      r.only_keys(c, where, {"kind", "args", "value"});
      const auto value = r.unsigned_field(c, "value", where);
      if (args_ok && args.size() != 1) {
        r.error(where, "equal_const takes exactly 1 arg, got " + std::to_string(args.size()));
      } else if (args_ok && value) {
        p.constraints.emplace_back(sat::EqualConst{args[0], *value});
      }
    } else if (*kind == "sum_equals") {
      r.only_keys(c, where, {"kind", "args", "value"});
      const auto value = r.unsigned_field(c, "value", where);
      if (args_ok && args.empty()) {
        r.error(where, "sum_equals needs at least 1 arg");
      } else if (args_ok && value) {
        p.constraints.emplace_back(sat::SumEquals{args, *value});
      }
    } else {
      r.error(where + ".kind", "unknown constraint kind '" + *kind +
                                   "' (expected not_equal, equal_const or sum_equals)");
    }
  }

  if (r.diags.empty()) {
    for (const auto& d : sat::validate_problem(p)) {
      r.error("$." + d.where, d.message);
    }
  }
  return p;
}

inline tsp::TspInstance read_tsp(const json& doc, Reader& r)
{
  r.only_keys(doc, "$", {"type", "adjacency"});
  tsp::TspInstance inst;
  if (!doc.contains("adjacency") || !doc.at("adjacency").is_array()) {
    r.error("$.adjacency", "expected an array of rows");
    return inst;
  }
  const auto& rows = doc.at("adjacency");
  const auto n = rows.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto where = "$.adjacency[" + std::to_string(i) + "]";
    if (!rows[i].is_array()) {
      r.error(where, "expected a row array");
      continue;
    }
    if (rows[i].size() != n) {
      r.error(where, "row has " + std::to_string(rows[i].size()) + " entries, matrix is not " +
                         std::to_string(n) + "x" + std::to_string(n));
      continue;
    }
    std::vector<std::uint64_t> row;
    for (std::size_t j = 0; j < n; ++j) {
      const auto v = r.unsigned_value(rows[i][j], where + "[" + std::to_string(j) + "]");
      row.push_back(v.value_or(0));
    }
    inst.weights.push_back(std::move(row));
  }
  if (!r.diags.empty()) {
    return inst;
  }
  if (n < tsp::kMinNodes || n > tsp::kMaxNodes) {
    r.error("$.adjacency", "node count must be in 3..8, got " + std::to_string(n));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (inst.weights[i][j] != inst.weights[j][i]) {
        r.error("$.adjacency[" + std::to_string(i) + "][" + std::to_string(j) + "]",
                "matrix is not symmetric (" + std::to_string(inst.weights[i][j]) + " vs " +
                    std::to_string(inst.weights[j][i]) + " at [" + std::to_string(j) + "][" +
                    std::to_string(i) + "])");
      }
    }
  }
  return inst;
}

}  // namespace detail

/// Parses and validates problem-file text.
inline ProblemFile parse_problem_text(std::string_view text, const std::string& source = "<input>")
{
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source, {detail::line_column(text, e.byte) + ": syntax error"});
  }
  detail::Reader r;
  if (!doc.is_object()) {
    throw ParseError(source, {"$: expected a JSON object"});
  }
  if (!doc.contains("type") || !doc.at("type").is_string()) {
    throw ParseError(source, {"$.type: missing problem type (expected \"sat\" or \"tsp\")"});
  }
  const auto type = doc.at("type").get<std::string>();
  ProblemFile file;
  if (type == "sat") {
    file.type = ProblemType::sat;
    file.problem = detail::read_sat(doc, r);
  } else if (type == "tsp") {
    file.type = ProblemType::tsp;
    file.problem = detail::read_tsp(doc, r);
  } else {
    throw ParseError(source, {"$.type: unknown problem type '" + type + "' (expected sat or tsp)"});
  }
  if (!r.diags.empty()) {
    throw ParseError(source, r.diags);
  }
  return file;
}

inline ProblemFile parse_problem(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError(path.string(), {"cannot open file"});
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_problem_text(buf.str(), path.string());
}

/// Resolves `auto` by problem class and rejects incompatible requests.
inline Algorithm select_algorithm(ProblemType type, Algorithm requested)
{
  const auto compatible = type == ProblemType::sat ? Algorithm::grover : Algorithm::qpe;
  if (requested == Algorithm::automatic || requested == compatible) {
    return compatible;
  }
  throw UsageError("algorithm '" + to_string(requested) + "' cannot solve " + to_string(type) +
                   " problems; compatible algorithms: " + to_string(compatible));
}

// Reports as JSON

inline json to_json(const Histogram& h)
{
  json counts = json::object();
  for (const auto& [k, v] : h.counts) {
    counts[k] = v;
  }
  return {{"shots", h.shots}, {"counts", counts}};
}

inline json to_json(const sat::SolveReport& report)
{
  json solutions = json::array();
  for (std::size_t i = 0; i < report.solutions.size(); ++i) {
    json values = json::object();
    for (const auto& [k, v] : report.solutions[i]) {
      values[k] = v;
    }
    const auto& cand = report.solution_candidates[i];
    solutions.push_back(
        {{"assignment", values}, {"bitstring", cand.bitstring}, {"frequency", cand.frequency}});
  }
  json trace = json::array();
  for (const auto& s : report.schedule_trace) {
    trace.push_back({{"iterations", s.iterations}, {"verified", s.verified}});
  }
  return {{"type", "sat"},
          {"algorithm", "grover"},
          {"status", report.status == sat::SolveStatus::solved ? "solved" : "no_solution"},
          {"solutions", solutions},
          {"iterations_used", report.iterations_used},
          {"shots", report.shots},
          {"frequency_threshold", report.frequency_threshold},
          {"search_qubits", report.layout.search_qubits},
          {"total_qubits", report.layout.total_qubits},
          {"histogram", to_json(report.histogram)},
          {"schedule_trace", trace}};
}

inline json to_json(const tsp::TspReport& report)
{
  json cycles = json::array();
  for (const auto& c : report.per_cycle) {
    cycles.push_back({{"tour", c.tour.nodes},
                      {"raw", c.estimate.raw},
                      {"phase", c.estimate.phase()},
                      {"probability", c.estimate.probability},
                      {"length", c.length}});
  }
  return {{"type", "tsp"},
          {"algorithm", "qpe"},
          {"status", "solved"},
          {"best_tour", report.best_tour.nodes},
          {"best_tour_reversed", tsp::reversed(report.best_tour).nodes},
          {"best_length", report.best_length},
          {"precision_bits", report.precision_bits},
          {"scale", report.scale},
          {"per_cycle", cycles}};
}

/// Schema violations of a report produced by to_json; empty means valid.
inline std::vector<std::string> validate_report_json(const json& report)
{
  std::vector<std::string> errors;
  auto need = [&](const char* key, auto predicate, const char* what) {
    if (!report.contains(key) || !predicate(report.at(key))) {
      errors.push_back(std::string("$.") + key + ": expected " + what);
    }
  };
  const auto is_uint = [](const json& v) { return v.is_number_unsigned(); };
  const auto is_array = [](const json& v) { return v.is_array(); };
  const auto is_string = [](const json& v) { return v.is_string(); };
  if (!report.is_object()) {
    return {"$: expected an object"};
  }
  need("type", is_string, "a string");
  need("status", [](const json& v) { return v == "solved" || v == "no_solution"; },
       "\"solved\" or \"no_solution\"");
  if (!errors.empty()) {
    return errors;
  }
  if (report.at("type") == "sat") {
    need("algorithm", [](const json& v) { return v == "grover"; }, "\"grover\"");
    need("solutions", is_array, "an array");
    need("iterations_used", is_uint, "a non-negative integer");
    need("shots", is_uint, "a non-negative integer");
    need("search_qubits", is_uint, "a non-negative integer");
    need("total_qubits", is_uint, "a non-negative integer");
    need("frequency_threshold", [](const json& v) { return v.is_number(); }, "a number");
    need("schedule_trace", is_array, "an array");
    need("histogram",
         [](const json& v) {
           return v.is_object() && v.contains("shots") && v.contains("counts") &&
                  v.at("counts").is_object();
         },
         "an object with shots and counts");
    if (report.contains("solutions") && report.at("solutions").is_array()) {
      for (std::size_t i = 0; i < report.at("solutions").size(); ++i) {
        const auto& s = report.at("solutions")[i];
        if (!s.is_object() || !s.contains("assignment") || !s.at("assignment").is_object() ||
            !s.contains("bitstring") || !s.at("bitstring").is_string()) {
          errors.push_back("$.solutions[" + std::to_string(i) +
                           "]: expected assignment and bitstring");
        }
      }
    }
  } else if (report.at("type") == "tsp") {
    need("algorithm", [](const json& v) { return v == "qpe"; }, "\"qpe\"");
    need("best_tour", is_array, "an array");
    need("best_tour_reversed", is_array, "an array");
    need("best_length", is_uint, "a non-negative integer");
    need("precision_bits", is_uint, "a non-negative integer");
    need("scale", is_uint, "a non-negative integer");
    need("per_cycle", is_array, "an array");
    if (report.contains("per_cycle") && report.at("per_cycle").is_array()) {
      for (std::size_t i = 0; i < report.at("per_cycle").size(); ++i) {
        const auto& c = report.at("per_cycle")[i];
        for (const char* key : {"tour", "raw", "phase", "probability", "length"}) {
          if (!c.is_object() || !c.contains(key)) {
            errors.push_back("$.per_cycle[" + std::to_string(i) + "]: missing '" + key + "'");
          }
        }
      }
    }
  } else {
    errors.push_back("$.type: expected \"sat\" or \"tsp\"");
  }
  return errors;
}

// Text rendering

inline std::string render_text(const sat::SolveReport& report, const sat::SatProblem& problem)
{
  if (report.status != sat::SolveStatus::solved) {
    return "no solution found\n";
  }
  std::string out;
  for (std::size_t i = 0; i < report.solutions.size(); ++i) {
    if (i) {
      out += '\n';
    }
    for (const auto& v : problem.vars) {
      out += v.name + " = " + std::to_string(report.solutions[i].at(v.name)) + "\n";
    }
  }
  return out;
}

/// The tour is shown starting at node 1 with the larger neighbour second,
/// i.e. the reverse orientation of the canonical form.
inline std::string render_text(const tsp::TspReport& report)
{
  return tsp::to_string(tsp::reversed(report.best_tour)) + " length " +
         std::to_string(report.best_length) + "\n";
}

struct RunConfig {
  std::size_t shots = 4096;
  std::uint64_t seed = 0;
  std::optional<double> threshold;
  std::size_t max_qubits = kDefaultQubitCap;
  OutputMode output = OutputMode::text;
  std::optional<std::filesystem::path> dump_circuit;
};

struct RunResult {
  int exit_code = 0;
  std::string out;
  std::string err;
};

inline constexpr int kExitSolved = 0;
inline constexpr int kExitNoSolution = 1;
inline constexpr int kExitUsage = 2;

namespace detail {

inline void dump(const std::filesystem::path& path, const Circuit& circuit)
{
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw std::runtime_error("cannot write circuit dump to '" + path.string() + "'");
  }
  f << export_text(circuit);
}

}  // namespace detail

/// Parses, dispatches and renders one problem. Exit codes: 0 solved,
/// 1 no solution found, 2 usage, parse or resource errors.
inline RunResult run(const std::filesystem::path& path, Algorithm choice, const RunConfig& config)
{
  RunResult result;
  try {
    if (config.shots < 1) {
      throw UsageError("--shots must be at least 1");
    }
    if (config.threshold && !(*config.threshold > 0.0 && *config.threshold < 1.0)) {
      throw UsageError("--threshold must be in (0, 1)");
    }
    const auto file = parse_problem(path);
    select_algorithm(file.type, choice);

    if (file.type == ProblemType::sat) {
      const auto& problem = file.sat();
      sat::SolveConfig cfg;
      cfg.shots = config.shots;
      cfg.seed = config.seed;
      cfg.frequency_threshold = config.threshold;
      cfg.qubit_cap = config.max_qubits;
      const auto report = sat::solve(problem, cfg);
      if (config.dump_circuit) {
        detail::dump(*config.dump_circuit,
                     sat::build_grover(problem, report.layout, report.iterations_used));
      }
      result.out = config.output == OutputMode::json ? to_json(report).dump(2) + "\n"
                                                     : render_text(report, problem);
      result.exit_code = report.status == sat::SolveStatus::solved ? kExitSolved : kExitNoSolution;
    } else {
      const auto& instance = file.tsp();
      tsp::TspConfig cfg;
      cfg.seed = config.seed;
      cfg.shots_per_cycle = config.shots;
      cfg.qubit_cap = config.max_qubits;
      const auto report = tsp::solve(instance, cfg);
      if (config.dump_circuit) {
        const tsp::PhaseUnitary unitary(instance, report.scale);
        detail::dump(*config.dump_circuit,
                     tsp::build_qpe(tsp::encode_eigenstate(report.best_tour, instance.n()), unitary,
                                    report.precision_bits));
      }
      result.out = config.output == OutputMode::json ? to_json(report).dump(2) + "\n"
                                                     : render_text(report);
      result.exit_code = kExitSolved;
    }
  } catch (const std::exception& e) {
    result.out.clear();
    result.err = std::string("error: ") + e.what() + "\n";
    result.exit_code = kExitUsage;
  }
  return result;
}

}  // namespace qsolve::cli
