#pragma once

#include "nagflow/linalg.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nagflow::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {
      "decompose",       "instability-test", "simulate-ode",
      "simulate-pullback", "simulate-average", "simulate-hybrid",
      "optimal-restart", "figure1",          "figure2"};
  return names;
}

/// Fully resolved run description. Optional numbers left empty mean "auto".
struct ScenarioConfig {
  std::string scenario;
  std::uint64_t seed = 20240531;

  // [field]
  Matrix Q;
  std::string fieldKind = "linear";  ///< linear | arctan
  double weight = 0;

  // [restart]  (eta and T0 also drive the plain ODE, tau = eta t + T0)
  double eta = 0.5;
  double T0 = 0.1;
  std::optional<double> T;       ///< empty: computed optimal restart period
  std::optional<double> cUpper;  ///< optimal-restart only; empty: fixed-point
  bool enforceWindow = true;
  int autoIterations = 1;

  // [initial]
  Vector x0, v0;             ///< plain ODE
  Vector q0, p0;             ///< hybrid system
  std::optional<double> tau0;  ///< empty: T0
  Vector y0, z0, zeta0, psi0;  ///< scaled systems, length 2n

  // [run]
  std::string out;
  double step = 1e-3;
  std::size_t stride = 1;
  double tEnd = 10;
  double tEndPlain = 100;
  double sEnd = 400;
  std::optional<double> sEndSlow;  ///< empty: 1/eps
  double blowupCap = 1e12;
  int quadratureNodes = 4096;
  double degeneracyTol = 1e-9;
  bool writeLyapunov = true;

  // [validate]
  int validateSamples = 256;
  double validateRadius = 10;

  Index dim() const { return Q.rows(); }
};

/// Parses `key = value` lines grouped under `[section]` headers; `#` starts
/// a comment, arrays are bracketed and may span lines. `overrides` hold
/// `section.key=value` (or `key=value` for top-level keys) and replace
/// values from the text. Unknown keys and invalid values throw ConfigError.
ScenarioConfig parse_config(const std::string& text,
                            const std::vector<std::string>& overrides = {});

/// Config document that parses back to `cfg`.
std::string resolved_text(const ScenarioConfig& cfg);

/// `config.section.key: value` lines for reports.
std::string resolved_report_lines(const ScenarioConfig& cfg);

}  // namespace nagflow::cli
