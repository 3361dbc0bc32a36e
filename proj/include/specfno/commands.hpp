#pragma once

#include <exception>
#include <ostream>
#include <string>
#include <vector>

#include "specfno/config.hpp"

// Subcommands behind the command-line tool. Each reads a validated RunConfig,
// computes, then writes its reports and manifest.json into the output
// directory. Nothing is written before the computation has finished.
namespace specfno::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitPrecondition = 3,
  kExitNumerical = 4,
  kExitIo = 5,
  kExitInternal = 1,
};

struct CommandOptions {
  bool record_wall_time = false;  ///< fill History::wall_ms (breaks byte determinism)
  std::ostream* log = nullptr;    ///< progress and summary lines
};

struct CommandOutcome {
  int status = kExitOk;             ///< nonzero when a numerical check failed
  std::vector<std::string> files;   ///< written, relative to the output dir
  std::string message;
};

/// Process-wide allocator settings for long runs (glibc only; no-op elsewhere).
void tune_allocator();

/// sample-grf, converge, decompose, state-norms, train, train-scheduled,
/// interp-check, grad-check.
const std::vector<std::string>& command_names();

/// Throws ConfigError for an unknown command, and the library errors
/// (PreconditionError, NumericalError, IoError) from the computation.
CommandOutcome run_command(const std::string& name, const config::RunConfig& cfg, const CommandOptions& options = {});

/// Maps an exception to its exit code and prints its message to `err`.
int exit_code_for(const std::exception_ptr& e, std::ostream& err);

}  // namespace specfno::cli
