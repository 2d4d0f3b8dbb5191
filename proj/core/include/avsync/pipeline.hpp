#pragma once

// Command implementations behind the `avsync` tool. Each command reads its
// inputs from a RunConfig, writes artifacts under config.out_dir and returns
// the process exit code.

#include <iosfwd>
#include <string_view>

#include "avsync/config.hpp"

namespace avsync {

enum ExitCode : int {
  kExitOk = 0,
  kExitSyncError = 1,
  kExitConfigError = 2,
};

enum class Command { Synth, Extract, Check, MonteCarlo, Eval };

Command parse_command(std::string_view name);

// These throw avsync::Error on bad configuration or input.
int cmd_synth(const RunConfig& config, std::ostream& log);
int cmd_extract(const RunConfig& config, std::ostream& log);
int cmd_check(const RunConfig& config, std::ostream& log);
int cmd_montecarlo(const RunConfig& config, std::ostream& log);
int cmd_eval(const RunConfig& config, std::ostream& log);

/// Dispatches and maps avsync::Error to kExitConfigError, printing the
/// message to `err`.
int run_command(Command command, const RunConfig& config, std::ostream& log, std::ostream& err);

}  // namespace avsync
