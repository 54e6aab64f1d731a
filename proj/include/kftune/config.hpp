#pragma once

#include <iosfwd>
#include <string>

#include "kftune/tuner.hpp"

namespace kftune {

/// Everything needed to run one tuning session from the command line.
struct ScenarioConfig {
  std::string name = "custom";
  Scenario scenario;
  DesignSpec design;
  TunerConfig tuner;
  std::string output_dir = "out";
  int grid_points = 0;  // lattice points per axis; 0 picks 101 (d = 1) or 41 (d > 1)

  int effective_grid_points() const;
};

/// Parses and validates a JSON scenario document (schema in README.md).
/// Unknown keys are rejected. Throws ConfigError naming the offending field,
/// or the line and column for syntax errors.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::string& path);

/// Canonical JSON rendering; parse_config(config_to_json(c)) reproduces c.
std::string config_to_json(const ScenarioConfig& cfg, int indent = 2);

/// JSON text of a bundled scenario ("case1" or "case2").
std::string bundled_config_text(const std::string& name);
ScenarioConfig bundled_config(const std::string& name);

/// True parameter values of the design, taken from the scenario truth.
VectorXd truth_point(const ScenarioConfig& cfg);

}  // namespace kftune
