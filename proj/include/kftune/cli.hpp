#pragma once

#include <iosfwd>

#include "kftune/config.hpp"

namespace kftune {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitRuntimeError = 3;

/// Runs the session and writes history.csv, surrogate_grid.csv,
/// consistency.csv and session.json into cfg.output_dir. Progress and the
/// final incumbent go to `log`. Returns a process exit code.
int run_scenario(const ScenarioConfig& cfg, std::ostream& log);

}  // namespace kftune
