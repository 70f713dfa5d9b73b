#pragma once

#include "nagflow/cli/config.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace nagflow::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kScenarioError = 3, kClaimViolation = 4 };

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunResult {
  int exitCode = kOk;
  std::vector<std::string> files;  ///< paths written, in order
  std::string report;              ///< contents of report.txt
};

/// Executes the scenario and writes report.txt, config.resolved, CSVs and
/// plot.gp under cfg.out. Library failures surface as ScenarioError.
RunResult run(const ScenarioConfig& cfg);

/// Parse + run with exit-code mapping; diagnostics go to `err`.
int run_text(const std::string& text, const std::vector<std::string>& overrides,
             std::ostream& err, RunResult* result = nullptr);

}  // namespace nagflow::cli
