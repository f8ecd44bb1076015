#pragma once

#include <ostream>

#include "mwlil/config.hpp"

namespace mwlil {

enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitConfig = 2, kExitBudget = 3 };

/// Parses the command line, runs the experiment and writes its outputs.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Runs a validated configuration; writes results.csv, manifest.json and any
/// command tables into c.output_dir.  Returns the exit code.
int run_experiment(const ExperimentConfig& c, std::ostream& out);

}  // namespace mwlil
