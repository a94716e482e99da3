#pragma once

#include <string>

#include "levyscale/config.hpp"

namespace levyscale {

enum ExitCode : int {
  exit_ok = 0,
  exit_config = 2,
  exit_numeric = 3,
  exit_io = 4,
};

/// Maps the library's exception classes to process exit codes.
int exit_code_for(const std::exception& e);

/// Batch commands. `out_dir` overrides output.directory when non-empty.
/// Each writes its files plus manifest.json and returns an exit code;
/// library errors propagate as exceptions.
int cmd_compute(const ExperimentConfig& cfg, const std::string& out_dir, bool oracle);
int cmd_simulate(const ExperimentConfig& cfg, const std::string& out_dir);
/// `data_dir` holds grid.csv / jumps.csv / observations.json (defaults to the
/// output directory). With `oracle`, theta_hat is replaced by the true values.
int cmd_estimate(const ExperimentConfig& cfg, const std::string& out_dir,
                 const std::string& data_dir, bool oracle);
/// SCALE_WORKERS in the environment overrides mc.workers.
int cmd_mc(const ExperimentConfig& cfg, const std::string& out_dir);

/// Full command line: scale compute|simulate|estimate|mc --config <path>
/// [--oracle] [--out <dir>] [--data <dir>].
int run_cli(int argc, char** argv);

}  // namespace levyscale
