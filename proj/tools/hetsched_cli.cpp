// hetsched: run, sweep and oracle-check subcommands.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hetsched/commands.hpp"
#include "hetsched/config.hpp"

using namespace hetsched;

namespace {

std::optional<ExperimentConfig> load(const std::string& path) {
  try {
    return parse_config(path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
  } catch (const InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << "\n";
  }
  return std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heterogeneous PLC/LTE uplink scheduler simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string policy_text = "mpc";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  bool plots_only = false;

  auto* run = app.add_subcommand("run", "Simulate one policy and write its metrics CSV");
  run->add_option("--config", config_path, "YAML config file")->required();
  run->add_option("--policy", policy_text, "mpc | greedy | single-plc | single-lte")
      ->check(CLI::IsMember({"mpc", "greedy", "single-plc", "single-lte"}));
  run->add_option("--seed", seed, "Override scenario.seed");
  run->add_option("--out", out_dir, "Output directory");

  auto* sweep = app.add_subcommand("sweep", "All policies at every sweep rate, with plots");
  sweep->add_option("--config", config_path, "YAML config file")->required();
  sweep->add_flag("--plots-only", plots_only, "Rebuild comparisons and plots from run CSVs");
  sweep->add_option("--out", out_dir, "Output directory");

  auto* oracle = app.add_subcommand("oracle-check", "Run the solver property suites");
  oracle->add_option("--config", config_path, "YAML config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  const auto cfg = load(config_path);
  if (!cfg) {
    return kExitConfigError;
  }
  try {
    if (*run) {
      return cmd_run(*cfg, {*parse_policy(policy_text), seed, out_dir}, std::cout, std::cerr);
    }
    if (*sweep) {
      return cmd_sweep(*cfg, {plots_only, out_dir}, std::cout, std::cerr);
    }
    return cmd_oracle_check(*cfg, std::cout, std::cerr);
  } catch (const InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPropertyFailure;
  }
}
