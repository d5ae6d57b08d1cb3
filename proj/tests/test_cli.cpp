#include "qsolve/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace qsolve;
using namespace qsolve::cli;
namespace fs = std::filesystem;

namespace {

const fs::path problems_dir = QSOLVE_PROBLEMS_DIR;

// Writes `text` to a fresh file under the test temp directory.
fs::path write_temp(const std::string& name, const std::string& text)
{
  const auto dir = fs::temp_directory_path() / "qsolve_cli_tests";
  fs::create_directories(dir);
  const auto path = dir / name;
  std::ofstream(path, std::ios::binary) << text;
  return path;
}

std::vector<std::string> diagnostics_of(const std::string& text)
{
  try {
    parse_problem_text(text, "t.json");
  } catch (const ParseError& e) {
    return e.diagnostics();
  }
  return {};
}

bool any_contains(const std::vector<std::string>& diags, const std::string& needle)
{
  return std::any_of(diags.begin(), diags.end(),
                     [&](const std::string& d) { return d.find(needle) != std::string::npos; });
}

}  // namespace

// parse_problem

TEST(ParseProblem, Kakuro2x2File)
{
  const auto f = parse_problem(problems_dir / "kakuro_2x2.json");
  ASSERT_EQ(f.type, ProblemType::sat);
  EXPECT_EQ(f.sat().vars.size(), 4u);
  EXPECT_EQ(f.sat().constraints.size(), 8u);
  EXPECT_EQ(f.sat().constraints[0], (sat::Constraint{sat::SumEquals{{"a", "c"}, 5}}));
  EXPECT_EQ(f.sat().constraints[1], (sat::Constraint{sat::NotEqual{"a", "c"}}));
}

TEST(ParseProblem, FourNodeTspFile)
{
  const auto f = parse_problem(problems_dir / "tsp4.json");
  ASSERT_EQ(f.type, ProblemType::tsp);
  EXPECT_EQ(f.tsp().weights,
            (std::vector<std::vector<std::uint64_t>>{
                {0, 2, 1, 3}, {2, 0, 2, 1}, {1, 2, 0, 4}, {3, 1, 4, 0}}));
}

TEST(ParseProblem, AsymmetricMatrixNamesCell)
{
  const auto d = diagnostics_of(R"({"type": "tsp", "adjacency": [[0,1,2],[1,0,3],[2,4,0]]})");
  ASSERT_EQ(d.size(), 1u);
  EXPECT_NE(d[0].find("$.adjacency[1][2]"), std::string::npos) << d[0];
  EXPECT_NE(d[0].find("not symmetric"), std::string::npos);
}

TEST(ParseProblem, NonSquareMatrix)
{
  const auto d = diagnostics_of(R"({"type": "tsp", "adjacency": [[0,1,2],[1,0],[2,3,0]]})");
  EXPECT_TRUE(any_contains(d, "$.adjacency[1]"));
}

TEST(ParseProblem, SyntaxErrorHasLineAndColumn)
{
  const auto d = diagnostics_of("{\n  \"type\": \"sat\",\n  \"variables\": [,]\n}");
  ASSERT_EQ(d.size(), 1u);
  EXPECT_NE(d[0].find("line 3, column"), std::string::npos) << d[0];
}

TEST(ParseProblem, UnknownTypeAndKind)
{
  EXPECT_TRUE(any_contains(diagnostics_of(R"({"type": "maxcut"})"), "unknown problem type"));
  const auto d = diagnostics_of(
      R"({"type": "sat", "variables": [{"name": "a", "bits": 1}],
          "constraints": [{"kind": "less_than", "args": ["a"]}]})");
  EXPECT_TRUE(any_contains(d, "$.constraints[0].kind"));
}

TEST(ParseProblem, NoSilentCoercions)
{
  // Negative, fractional and string numbers, unknown fields.
  EXPECT_FALSE(diagnostics_of(R"({"type": "sat", "variables": [{"name": "a", "bits": -1}],
                                  "constraints": []})")
                   .empty());
  EXPECT_FALSE(diagnostics_of(R"({"type": "sat", "variables": [{"name": "a", "bits": 1.5}],
                                  "constraints": [{"kind": "equal_const", "args": ["a"], "value": 1}]})")
                   .empty());
  EXPECT_TRUE(any_contains(
      diagnostics_of(R"({"type": "tsp", "adjacency": [[0,"1",2],[1,0,3],[2,3,0]]})"),
      "$.adjacency[0][1]"));
  EXPECT_TRUE(any_contains(
      diagnostics_of(R"({"type": "tsp", "adjacency": [[0,1,2],[1,0,3],[2,3,0]], "extra": 1})"),
      "unknown field 'extra'"));
}

TEST(ParseProblem, SemanticErrorsCarryPaths)
{
  const auto d = diagnostics_of(
      R"({"type": "sat", "variables": [{"name": "a", "bits": 2}],
          "constraints": [{"kind": "equal_const", "args": ["a"], "value": 1},
                          {"kind": "not_equal", "args": ["a", "q"]}]})");
  ASSERT_EQ(d.size(), 1u);
  EXPECT_NE(d[0].find("$.constraints[1]"), std::string::npos) << d[0];
  EXPECT_NE(d[0].find("'q'"), std::string::npos);
}

TEST(ParseProblem, EveryDiagnosticHasALocation)
{
  const std::vector<std::string> bad = {
      "[1, 2]",
      R"({"variables": []})",
      R"({"type": "sat"})",
      R"({"type": "sat", "variables": [{"bits": 1}], "constraints": [{"args": []}]})",
      R"({"type": "tsp", "adjacency": [[0,1],[1,0]]})",
      R"({"type": "tsp", "adjacency": 5})",
  };
  for (const auto& text : bad) {
    const auto d = diagnostics_of(text);
    ASSERT_FALSE(d.empty()) << text;
    for (const auto& msg : d) {
      EXPECT_TRUE(msg.rfind("$", 0) == 0 || msg.rfind("line ", 0) == 0) << msg;
    }
  }
}

TEST(ParseProblem, MissingFile)
{
  EXPECT_THROW(parse_problem(problems_dir / "does_not_exist.json"), ParseError);
}

// select_algorithm

TEST(SelectAlgorithm, AutoAndExplicit)
{
  EXPECT_EQ(select_algorithm(ProblemType::sat, Algorithm::automatic), Algorithm::grover);
  EXPECT_EQ(select_algorithm(ProblemType::tsp, Algorithm::automatic), Algorithm::qpe);
  EXPECT_EQ(select_algorithm(ProblemType::sat, Algorithm::grover), Algorithm::grover);
  try {
    select_algorithm(ProblemType::sat, Algorithm::qpe);
    FAIL() << "expected rejection";
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("grover"), std::string::npos);
  }
  EXPECT_THROW(select_algorithm(ProblemType::tsp, Algorithm::grover), UsageError);
  EXPECT_THROW(parse_algorithm("shor"), std::invalid_argument);
}

// run

TEST(Run, Kakuro2x2Text)
{
  const auto r = run(problems_dir / "kakuro_2x2.json", Algorithm::automatic, {});
  EXPECT_EQ(r.exit_code, kExitSolved);
  EXPECT_EQ(r.out, "a = 3\nb = 1\nc = 2\nd = 3\n");
  EXPECT_TRUE(r.err.empty());
}

TEST(Run, FourNodeTspText)
{
  const auto r = run(problems_dir / "tsp4.json", Algorithm::automatic, {});
  EXPECT_EQ(r.exit_code, kExitSolved);
  EXPECT_EQ(r.out, "[1, 4, 2, 3] length 7\n");
}

TEST(Run, UnitKakuroListsBothSolutions)
{
  const auto r = run(problems_dir / "kakuro_unit.json", Algorithm::grover, {});
  EXPECT_EQ(r.exit_code, kExitSolved);
  // Blocks follow measured frequency, so either order is possible.
  const std::string first = "a = 0\nb = 1\nc = 1\nd = 0\n";
  const std::string second = "a = 1\nb = 0\nc = 0\nd = 1\n";
  EXPECT_TRUE(r.out == first + "\n" + second || r.out == second + "\n" + first) << r.out;
}

TEST(Run, UnsatisfiableExitsOne)
{
  const auto r = run(problems_dir / "unsat.json", Algorithm::automatic, {});
  EXPECT_EQ(r.exit_code, kExitNoSolution);
  EXPECT_EQ(r.out, "no solution found\n");
}

TEST(Run, UsageAndParseErrorsExitTwo)
{
  const auto incompatible = run(problems_dir / "tsp4.json", Algorithm::grover, {});
  EXPECT_EQ(incompatible.exit_code, kExitUsage);
  EXPECT_NE(incompatible.err.find("qpe"), std::string::npos);

  const auto bad = write_temp("bad.json", "{\"type\": \"sat\",");
  const auto parse = run(bad, Algorithm::automatic, {});
  EXPECT_EQ(parse.exit_code, kExitUsage);
  EXPECT_EQ(parse.err.rfind("error: ", 0), 0u);
  EXPECT_TRUE(parse.out.empty());

  RunConfig zero_shots;
  zero_shots.shots = 0;
  EXPECT_EQ(run(problems_dir / "tsp4.json", Algorithm::automatic, zero_shots).exit_code, kExitUsage);

  RunConfig bad_threshold;
  bad_threshold.threshold = 1.5;
  EXPECT_EQ(run(problems_dir / "kakuro_unit.json", Algorithm::automatic, bad_threshold).exit_code,
            kExitUsage);
}

TEST(Run, QubitCapIsAResourceError)
{
  RunConfig cfg;
  cfg.max_qubits = 12;
  const auto r = run(problems_dir / "kakuro_2x2.json", Algorithm::automatic, cfg);
  EXPECT_EQ(r.exit_code, kExitUsage);
  EXPECT_NE(r.err.find("12"), std::string::npos) << r.err;
}

TEST(Run, DeterministicText)
{
  RunConfig cfg;
  cfg.seed = 42;
  for (const char* name : {"kakuro_unit.json", "kakuro_2x2.json", "tsp4.json"}) {
    const auto a = run(problems_dir / name, Algorithm::automatic, cfg);
    const auto b = run(problems_dir / name, Algorithm::automatic, cfg);
    EXPECT_EQ(a.out, b.out) << name;
    EXPECT_EQ(a.exit_code, b.exit_code);
  }
}

TEST(Run, JsonReportsValidate)
{
  RunConfig cfg;
  cfg.output = OutputMode::json;
  for (const char* name : {"kakuro_unit.json", "unsat.json", "tsp4.json"}) {
    const auto r = run(problems_dir / name, Algorithm::automatic, cfg);
    ASSERT_NE(r.exit_code, kExitUsage) << r.err;
    const auto doc = json::parse(r.out);
    EXPECT_TRUE(validate_report_json(doc).empty()) << name;
  }
}

TEST(Run, JsonSolutionsPassClassicalCheck)
{
  RunConfig cfg;
  cfg.output = OutputMode::json;
  const auto path = problems_dir / "kakuro_2x2.json";
  const auto doc = json::parse(run(path, Algorithm::automatic, cfg).out);
  const auto problem = parse_problem(path).sat();
  ASSERT_EQ(doc.at("solutions").size(), 1u);
  for (const auto& s : doc.at("solutions")) {
    sat::Assignment a;
    for (const auto& [k, v] : s.at("assignment").items()) {
      a[k] = v.get<std::uint64_t>();
    }
    EXPECT_TRUE(sat::classical_check(a, problem));
  }
  EXPECT_EQ(doc.at("search_qubits"), 8);
  EXPECT_EQ(doc.at("status"), "solved");
}

TEST(Run, TspJsonFields)
{
  RunConfig cfg;
  cfg.output = OutputMode::json;
  const auto doc = json::parse(run(problems_dir / "tsp4.json", Algorithm::qpe, cfg).out);
  EXPECT_EQ(doc.at("best_tour"), json({1, 3, 2, 4}));
  EXPECT_EQ(doc.at("best_tour_reversed"), json({1, 4, 2, 3}));
  EXPECT_EQ(doc.at("best_length"), 7);
  EXPECT_EQ(doc.at("scale"), 16);
  ASSERT_EQ(doc.at("per_cycle").size(), 3u);
  EXPECT_EQ(doc.at("per_cycle")[0].at("length"), 11);
  EXPECT_EQ(doc.at("per_cycle")[1].at("length"), 8);
  EXPECT_EQ(doc.at("per_cycle")[2].at("length"), 7);
}

TEST(ValidateReportJson, FlagsMissingFields)
{
  EXPECT_FALSE(validate_report_json(json::array()).empty());
  EXPECT_FALSE(validate_report_json({{"type", "sat"}, {"status", "solved"}}).empty());
  EXPECT_FALSE(validate_report_json({{"type", "tsp"}, {"status", "maybe"}}).empty());
}

TEST(Run, DumpCircuitRoundTrips)
{
  const auto dir = fs::temp_directory_path() / "qsolve_cli_tests";
  fs::create_directories(dir);
  for (const char* name : {"kakuro_unit.json", "tsp4.json"}) {
    RunConfig cfg;
    cfg.dump_circuit = dir / (std::string(name) + ".circuit");
    const auto r = run(problems_dir / name, Algorithm::automatic, cfg);
    ASSERT_EQ(r.exit_code, kExitSolved) << r.err;
    std::ifstream in(*cfg.dump_circuit, std::ios::binary);
    std::ostringstream text;
    text << in.rdbuf();
    const auto circuit = parse_text(text.str());
    EXPECT_EQ(export_text(circuit), text.str());
    EXPECT_GT(circuit.ops().size(), 0u);
  }
}

TEST(Run, DumpedGroverCircuitAmplifiesSolutions)
{
  const auto dir = fs::temp_directory_path() / "qsolve_cli_tests";
  fs::create_directories(dir);
  RunConfig cfg;
  cfg.dump_circuit = dir / "unit.circuit";
  ASSERT_EQ(run(problems_dir / "kakuro_unit.json", Algorithm::automatic, cfg).exit_code,
            kExitSolved);
  std::ifstream in(*cfg.dump_circuit, std::ios::binary);
  std::ostringstream text;
  text << in.rdbuf();
  const auto circuit = parse_text(text.str());
  const auto r = execute(circuit, 0, 0);
  const auto probs = marginal_probabilities(r.state, std::vector<Qubit>{0, 1, 2, 3});
  EXPECT_NEAR(probs.at("0110") + probs.at("1001"), 0.9453125, 1e-9);
}
