#pragma once

#include "nagflow/fields.hpp"
#include "nagflow/linalg.hpp"

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace nagflow {

/// Reset data of the restarting hybrid system: tau flows at rate eta on
/// [T0, T] and is reset to T0 (with p reset to 0) when it reaches T.
struct RestartConfig {
  double T0 = 0.1;
  double T = 0.471;
  double eta = 0.5;

  /// 0 < T0 < T and eta in (0, 1]; throws std::invalid_argument otherwise.
  void validate() const;
  /// Flow time between consecutive resets, (T - T0) / eta.
  double flowLength() const { return (T - T0) / eta; }
};

struct HybridState {
  Vector q;
  Vector p;
  double tau = 0;
};

struct HybridSample {
  double t = 0;
  int j = 0;
  Vector q;
  Vector p;
  double tau = 0;
};

struct HybridTrajectory {
  std::vector<HybridSample> samples;
  /// Positions in `samples` of post-jump entries; each is preceded by the
  /// pre-jump sample at the same t.
  std::vector<std::size_t> jumpIndices;
  bool blewUp = false;
  double step = 0;  ///< flow step used on full intervals

  int jumps() const { return static_cast<int>(jumpIndices.size()); }
};

struct HybridOptions {
  double h = 1e-3;
  double blowUpCap = 1e12;
  std::size_t stride = 1;  ///< record every stride-th flow step; jumps are always kept
};

/// Flows f(chi) = (p, -(3/tau) p - G(q), eta) while tau < T and applies
/// g(chi) = (q, 0, T0) exactly when tau = T. The step is snapped so every flow
/// interval ends on a grid point.
HybridTrajectory simulate_hybrid(const GeneralField& field, const RestartConfig& cfg,
                                 const HybridState& chi0, double tEnd,
                                 const HybridOptions& opts = {});
HybridTrajectory simulate_hybrid(const LinearField& field, const RestartConfig& cfg,
                                 const HybridState& chi0, double tEnd,
                                 const HybridOptions& opts = {});

struct FieldConstants {
  double kappaJ = 0;
  double ellJ = 0;
  double ellK = 0;
};

FieldConstants constants_of(const LinearField& field);
FieldConstants constants_of(const GeneralField& field);

struct LyapunovCertificate {
  double a = 0, b = 0, c = 0, delta = 0, m = 0;
  double cLower = 0, cUpper = 0;
  double lambda = 0, mu = 0;
  double Gamma = 0, nu1 = 0, nu2 = 0, nu = 0;
  double rho = 0;
  double Tlower = 0;
  double Tupper = std::numeric_limits<double>::infinity();
  RestartConfig config;
  FieldConstants constants;
  bool admissible = false;  ///< Tlower < T <= Tupper and eta in (0, 1)
};

/// Every constant of the Lyapunov certificate, without enforcing the window.
/// Values derived from an inadmissible config (e.g. mu < 0 for T > Tupper)
/// are returned as computed.
LyapunovCertificate lyapunov_constants(const FieldConstants& k, const RestartConfig& cfg);

/// As lyapunov_constants, but throws WindowViolation unless Tlower < T <= Tupper
/// and eta in (0, 1).
LyapunovCertificate lyapunov_certificate(const FieldConstants& k, const RestartConfig& cfg);

/// V = a|q + (tau/b) p - x*|^2 + c tau^2 |p|^2 + delta tau^2 (J(q) - J(x*)).
double lyapunov_value(const LyapunovCertificate& cert, const GeneralField& field,
                      const HybridState& chi);
double lyapunov_value(const LyapunovCertificate& cert, const GeneralField& field,
                      const HybridSample& sample);

/// Squared distance to A = {x*} x {0} x [T0, T].
double distance_to_attractor_sq(const GeneralField& field, const HybridSample& sample);

struct DecreaseReport {
  std::size_t flowChecks = 0;
  std::size_t flowViolations = 0;
  double worstFlowMargin = -std::numeric_limits<double>::infinity();  ///< max (lhs - rhs) / V
  std::size_t jumpChecks = 0;
  std::size_t jumpViolations = 0;
  double worstJumpMargin = -std::numeric_limits<double>::infinity();
  std::size_t contractionChecks = 0;
  std::size_t contractionViolations = 0;
  double worstContractionRatio = 0;  ///< max c_{j+1} / c_j
  double contractionBound = 0;       ///< e^{-rho}

  bool passed() const {
    return flowViolations == 0 && jumpViolations == 0 && contractionViolations == 0;
  }
};

/// Discrete Lie-derivative check (V_{k+1} - V_k)/dt <= -mu V_k + 10 dt max(V_k, V_{k+1}),
/// jump check V+ - V- <= -(nu/cUpper) V- + 1e-9 V-, and per-jump contraction
/// c_{j+1} <= e^{-rho} c_j on interval-start values.
DecreaseReport verify_decrease(const GeneralField& field, const LyapunovCertificate& cert,
                               const HybridTrajectory& traj);

struct EnvelopeReport {
  double MJ = 0;
  double MG = 0;
  std::size_t samplesChecked = 0;
  std::size_t jViolations = 0;
  std::size_t gViolations = 0;
  double worstJRatio = 0;  ///< max Jtilde / bound
  double worstGRatio = 0;  ///< max |G|^2 / bound
  double c1 = 0;  ///< UGES constants fitted on |chi|_A <= c1 |chi_0|_A e^{-c2 (t + j)}
  double c2 = 0;

  bool passed() const { return jViolations == 0 && gViolations == 0; }
};

/// Checks Jtilde(q) <= MJ T^2 e^{-rho j} / tau^2 and |G(q)|^2 <= MG T^2 e^{-rho j} / tau^2
/// at every sample, with MJ = V(chi(0,0)) / 2 and MG = 2 (ellJ + ellK)^2 MJ / kappaJ.
EnvelopeReport verify_envelopes(const GeneralField& field, const LyapunovCertificate& cert,
                                const HybridTrajectory& traj);

struct OptimalRestart {
  double beta = 0;
  double xiStar = 0;
  double Tlower = 0;
  double Topt = 0;
  int iterations = 0;  ///< fixed-point refinements of cUpper (auto variant only)
  double cUpper = 0;
};

/// Root of ln(1 - beta(1 - xi)) + beta xi / (1 - beta(1 - xi)) on (0, 1) by bisection,
/// beta = min(1, kappaJ) / cUpper. Throws BetaOutOfRange unless beta in (0, 1].
OptimalRestart optimal_restart(double kappaJ, double eta, double T0, double cUpper,
                               double tol = 1e-12);

/// cUpper from the certificate at T = 2 Tlower, then `iterations` fixed-point
/// refinements T <- Tlower / xi*(beta(cUpper(T))).
OptimalRestart optimal_restart_auto(const FieldConstants& k, double eta, double T0,
                                    int iterations = 1, double tol = 1e-12);

/// The optimality function whose root is xi*.
double restart_optimality(double beta, double xi);

std::string to_text(const LyapunovCertificate& cert);
std::string to_text(const DecreaseReport& rep);
std::string to_text(const EnvelopeReport& rep);

}  // namespace nagflow
