#pragma once

#include <string>

#include "baxq/config.hpp"

namespace baxq {

struct RunOutcome {
  int exit_code = 0;        // 0 all checks passed, 1 any failure or error
  std::string report_path;  // JSON report written for the run
};

// Executes one CLI command ("verify", "sweep", "limits", "spectrum",
// "bethe") into out_dir. Configuration problems throw ModelError before any
// check runs; computational failures inside a single check are recorded in
// the report with verdict "error" and the run continues.
RunOutcome run_command(const std::string& command, const RunConfig& cfg,
                       const std::string& out_dir);

}  // namespace baxq
