// kftune: tune Kalman filter noise parameters by Bayesian optimization.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "kftune/cli.hpp"
#include "kftune/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Auto-tune Kalman filter noise covariances with GP Bayesian optimization"};
  std::string config_path;
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<int> iters;
  std::string cost;
  std::string out_dir;
  std::optional<int> threads;
  bool print_config = false;

  app.add_option("--config", config_path, "JSON scenario file")->check(CLI::ExistingFile);
  app.add_option("--scenario", scenario, "bundled scenario, or custom with --config")
      ->check(CLI::IsMember({"case1", "case2", "custom"}));
  app.add_option("--seed", seed, "master seed");
  app.add_option("--iters", iters, "maximum GPBO iterations")->check(CLI::NonNegativeNumber);
  app.add_option("--cost", cost, "tuning cost")->check(CLI::IsMember({"nees", "nis"}));
  app.add_option("--out-dir", out_dir, "directory for CSV/JSON artifacts");
  app.add_option("--threads", threads, "threads for the Monte Carlo runs")->check(CLI::PositiveNumber);
  app.add_flag("--print-config", print_config, "print the resolved configuration and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kftune::kExitConfigError;
  }

  kftune::ScenarioConfig cfg;
  try {
    if (!config_path.empty()) {
      cfg = kftune::load_config(config_path);
      if (!scenario.empty()) cfg.name = scenario;
    } else if (scenario.empty() || scenario == "custom") {
      std::cerr << "config error: --scenario custom (or no --scenario) requires --config PATH\n";
      return kftune::kExitConfigError;
    } else {
      cfg = kftune::bundled_config(scenario);
    }
    if (seed) cfg.tuner.master_seed = *seed;
    if (iters) cfg.tuner.max_iterations = *iters;
    if (!cost.empty()) cfg.design.cost_kind = cost == "nis" ? kftune::CostKind::Nis : kftune::CostKind::Nees;
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (threads) cfg.tuner.threads = *threads;
    // Re-validate after overrides.
    cfg = kftune::parse_config(kftune::config_to_json(cfg));
  } catch (const kftune::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kftune::kExitConfigError;
  }

  if (print_config) {
    std::cout << kftune::config_to_json(cfg) << '\n';
    return kftune::kExitOk;
  }
  return kftune::run_scenario(cfg, std::cout);
}
