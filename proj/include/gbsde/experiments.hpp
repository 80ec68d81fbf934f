#pragma once

#include <iosfwd>
#include <string>

#include "gbsde/config.hpp"

namespace gbsde {

enum ExitCode : int { exit_ok = 0, exit_property_failure = 1, exit_config_invalid = 2, exit_numerical_failure = 3 };

/// Each runner writes its artifacts under config.output_dir and reports errors to `log`.
int run_solve(const ExperimentConfig& config, std::ostream& log);
int run_properties(const ExperimentConfig& config, std::ostream& log);
int run_dm(const ExperimentConfig& config, std::ostream& log);
int run_fixedpoint(const ExperimentConfig& config, std::ostream& log);
int run_recover(const ExperimentConfig& config, std::ostream& log);
int run_convergence(const ExperimentConfig& config, std::ostream& log);

/// Dispatch by subcommand name; unknown names are a config error.
int run_command(const std::string& command, const ExperimentConfig& config, std::ostream& log);

}  // namespace gbsde
