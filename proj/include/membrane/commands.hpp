#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "membrane/config.hpp"

namespace membrane {

// Process exit codes shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kParseError = 1,     // malformed config or unreadable input file
  kPrecondition = 2,   // violated problem precondition
  kSolverFailure = 3,  // factorization or residual failure
  kIoError = 4,        // artifact write failure
  kCheckFailed = 5,    // a verification check did not pass
};

// Subcommand bodies; they throw (ConfigError, std::invalid_argument,
// SolverError, std::runtime_error) and run_command maps the throw sites to
// exit codes.  `log` receives the human-readable progress/summary lines.
void cmd_solve_forces(const RunConfig& rc, std::ostream& log);
void cmd_solve_constraints(const RunConfig& rc, std::ostream& log);
void cmd_sweep(const RunConfig& rc, std::ostream& log);
bool cmd_verify(const RunConfig& rc, std::ostream& log);  // true if all pass
void cmd_mesh(const RunConfig& rc, std::ostream& log);

struct CliOverrides {
  std::optional<std::string> out_dir;
  std::optional<int> level;
  std::optional<double> tol;
};

// Loads the config (empty path = all defaults), applies overrides, runs the
// named subcommand and converts exceptions into exit codes, printing a
// one-line `error: ...` reason to `log`.
int run_command(const std::string& name, const std::string& config_path,
                const CliOverrides& overrides, std::ostream& log);

}  // namespace membrane
