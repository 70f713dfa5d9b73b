#include "nagflow/cli/csv.hpp"
#include "nagflow/cli/scenario.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

struct Invocation {
  std::string config;
  std::string out;
  std::string step;
  long long seed = -1;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Invocation& inv) {
  cmd->add_option("-c,--config", inv.config, "scenario config file");
  cmd->add_option("--out", inv.out, "output directory (run.out)");
  cmd->add_option("--seed", inv.seed, "random seed")->check(CLI::NonNegativeNumber);
  cmd->add_option("--step", inv.step, "integration step (run.step)");
  cmd->add_option("--set", inv.sets, "override, section.key=value")->expected(0, -1);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nesterov flows under non-conservative fields: averaging and restarts"};
  app.require_subcommand(1);
  Invocation inv;

  auto* runCmd = app.add_subcommand("run", "run the scenario named in the config file");
  add_common(runCmd, inv);
  std::vector<std::pair<CLI::App*, std::string>> scenarioCmds;
  for (const auto& name : nagflow::cli::scenario_names()) {
    auto* cmd = app.add_subcommand(name, "run the " + name + " scenario");
    add_common(cmd, inv);
    scenarioCmds.emplace_back(cmd, name);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : nagflow::cli::kConfigError;
  }

  std::string text;
  if (!inv.config.empty()) {
    std::ifstream f(inv.config, std::ios::binary);
    if (!f) {
      std::cerr << "config error: cannot read '" << inv.config << "'\n";
      return nagflow::cli::kConfigError;
    }
    std::ostringstream ss;
    ss << f.rdbuf();
    text = ss.str();
  }

  std::vector<std::string> overrides;
  for (const auto& [cmd, name] : scenarioCmds) {
    if (cmd->parsed()) overrides.push_back("scenario=" + name);
  }
  if (runCmd->parsed() && inv.config.empty()) {
    std::cerr << "config error: 'run' needs --config\n";
    return nagflow::cli::kConfigError;
  }
  overrides.insert(overrides.end(), inv.sets.begin(), inv.sets.end());
  if (!inv.out.empty()) overrides.push_back("run.out=\"" + inv.out + "\"");
  if (inv.seed >= 0) overrides.push_back("seed=" + std::to_string(inv.seed));
  if (!inv.step.empty()) overrides.push_back("run.step=" + inv.step);

  nagflow::cli::RunResult result;
  const int code = nagflow::cli::run_text(text, overrides, std::cerr, &result);
  if (code == nagflow::cli::kOk || code == nagflow::cli::kClaimViolation) {
    for (const auto& f : result.files) std::cout << "wrote " << f << '\n';
  }
  return code;
}
