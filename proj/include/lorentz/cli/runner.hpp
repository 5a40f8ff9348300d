#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "lorentz/cli/config.hpp"
#include "lorentz/parallel.hpp"

namespace lorentz::cli {

enum ExitCode : int { kPass = 0, kVerdictFailure = 1, kConfigError = 2, kRuntimeError = 3 };

struct RunOptions {
  std::filesystem::path out_dir;
  ExecPolicy policy{};
  bool quiet = false;
};

/// Runs the configured experiment and writes results.json plus CSV and SVG
/// files into out_dir. Errors are recorded in results.json. Returns the
/// process exit code.
int run_experiment(const ExperimentConfig& config, const RunOptions& options);

}  // namespace lorentz::cli
