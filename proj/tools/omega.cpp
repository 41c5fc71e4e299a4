// omega <command> --config <path> --out <dir> [--seed N] [--step H]
//
// Exit codes: 0 success, 1 I/O failure, 2 invalid input, 3 numeric failure.

#include "omega/scenario.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kExitIo = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;

}  // namespace

int main(int argc, char** argv) {
  namespace sc = omega::scenario;

  CLI::App app{"Simulate and analyze dimension-varying linear and control-affine systems."};
  std::string command;
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> step;

  app.add_option("command", command, "simulate | embed | dwell | ctrb | obs | chain | reduce | approx | reduce-vec | lattice")
      ->required()
      ->check(CLI::IsMember(sc::command_names()));
  app.add_option("--config", config_path, "scenario JSON")->required();
  app.add_option("--out", out_dir, "output directory (created if missing)")->required();
  app.add_option("--seed", seed, "overrides the random-signal and experiment seeds");
  app.add_option("--step", step, "overrides the integration step")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    sc::ScenarioConfig cfg = sc::load_config(config_path);
    if (seed) {
      if (cfg.signal && cfg.signal->kind == sc::SignalSpecKind::random) cfg.signal->seed = *seed;
      if (cfg.experiment) cfg.experiment->seed = *seed;
    }
    if (step) cfg.step = *step;
    sc::run_command(command, cfg, out_dir, std::cout);
  } catch (const omega::numeric_failure& e) {
    std::cerr << "omega " << command << ": numeric failure: " << e.what() << " (t = " << sc::fmt(e.time()) << ")\n";
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    std::cerr << "omega " << command << ": invalid input: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "omega " << command << ": " << e.what() << '\n';
    return kExitIo;
  }
  return 0;
}
