#include "qsolve/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
  using namespace qsolve::cli;

  CLI::App app{"qsolve: solve constraint and travelling-salesman problems on a simulated "
               "quantum computer"};
  app.require_subcommand(1);

  auto* solve = app.add_subcommand("solve", "Solve a problem file");
  std::string input;
  std::string algorithm = "auto";
  std::string output = "text";
  std::string dump_path;
  RunConfig config;
  double threshold = 0.0;

  solve->add_option("--input", input, "Problem file (JSON)")->required();
  solve->add_option("--algorithm", algorithm, "grover | qpe | auto")
      ->check(CLI::IsMember({"grover", "qpe", "auto"}));
  solve->add_option("--shots", config.shots, "Measurements per circuit run");
  solve->add_option("--seed", config.seed, "Sampler seed");
  auto* threshold_opt =
      solve->add_option("--threshold", threshold, "Relative frequency for Grover candidates");
  solve->add_option("--output", output, "text | json")->check(CLI::IsMember({"text", "json"}));
  solve->add_option("--dump-circuit", dump_path, "Write the final circuit in text form");
  solve->add_option("--max-qubits", config.max_qubits, "Simulator qubit cap");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (*threshold_opt) {
    config.threshold = threshold;
  }
  config.output = output == "json" ? OutputMode::json : OutputMode::text;
  if (!dump_path.empty()) {
    config.dump_circuit = dump_path;
  }

  const auto result = run(input, parse_algorithm(algorithm), config);
  std::cout << result.out;
  std::cerr << result.err;
  return result.exit_code;
}
