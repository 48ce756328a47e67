#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ensmetro/config.hpp"

namespace ensmetro {

enum ExitCode : int { kSuccess = 0, kValidationFailure = 1, kNumericalFailure = 2, kIoFailure = 3 };

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"signal",       "crb",          "oracle-check",
                                                 "montecarlo",   "optimize-std", "optimize-ghz",
                                                 "sweep"};
  return names;
}

// Each command writes its files into cfg.out_dir and a short summary to `log`.
// Return value is the process exit code; exceptions propagate.
int cmd_signal(const RunConfig& cfg, std::ostream& log);
int cmd_crb(const RunConfig& cfg, std::ostream& log);
int cmd_oracle_check(const RunConfig& cfg, std::ostream& log);
int cmd_montecarlo(const RunConfig& cfg, std::ostream& log);
int cmd_optimize_std(const RunConfig& cfg, std::ostream& log);
int cmd_optimize_ghz(const RunConfig& cfg, std::ostream& log);
int cmd_sweep(const RunConfig& cfg, std::ostream& log);

/// Dispatches by name and maps exceptions onto exit codes, reporting to `err`.
int run_command(const std::string& name, const RunConfig& cfg, std::ostream& log,
                std::ostream& err);

}  // namespace ensmetro
