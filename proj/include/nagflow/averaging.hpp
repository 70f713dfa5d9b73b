#pragma once

#include "nagflow/fields.hpp"
#include "nagflow/odesim.hpp"

#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace nagflow {

struct Rational {
  long num = 0;
  long den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

/// Closest fraction to x > 0 with denominator <= maxDenominator, found from
/// the continued-fraction convergents and the last admissible semiconvergent.
Rational best_rational(double x, long maxDenominator);

struct PeriodOptions {
  long maxDenominator = 64;
  double fitTolerance = 1e-9;  ///< relative tolerance on each frequency ratio
};

/// Common period of the drift flow. Frequencies satisfy lambda_j = k_j * omega0
/// with mu = lambda_min and L the lcm of the fitted ratio denominators.
struct PeriodResult {
  double omega0 = 0;
  double period = 0;
  std::vector<long> ratios;  ///< k_j, one per frequency
  double mu = 0;
  long L = 1;
};

/// Throws NotCommensurate if some ratio lambda_j / lambda_min has no rational
/// fit within tolerance.
PeriodResult period(const DriftGenerator& gen, const PeriodOptions& options = {});

/// Which hypotheses of the instability theorem hold.
struct TheoremConditions {
  bool offDiagonalNonzero = false;  ///< (i) every off-diagonal entry of Qa is nonzero
  bool commensurate = false;        ///< (ii) rational-square spectrum structure of Qs
  bool singleDegenerate = false;    ///< (iii) exactly one repeated eigenvalue of Qs
  int repeatedEigenvalues = 0;
  std::vector<std::string> failures;

  bool all() const { return offDiagonalNonzero && commensurate && singleDegenerate; }
};

TheoremConditions check_conditions(const LinearField& field, double degeneracyTol = 1e-9,
                                   const PeriodOptions& periodOptions = {});

struct AveragedSystem {
  Matrix B1bar;
  Matrix B2bar;
  std::vector<std::complex<double>> spectrumB1;
  double maxRealPart = 0;
  std::optional<PeriodResult> period;
  TheoremConditions conditions;
};

/// Composite Simpson over one period of e^{-As} B_k e^{As}, k = 1, 2, with
/// `nodes` (even, >= 64) subintervals and pairwise summation.
/// Propagates NotCommensurate.
AveragedSystem average_quadrature(const LinearField& field, int nodes = 4096,
                                  const PeriodOptions& periodOptions = {});

/// Closed-form average: cross terms between distinct eigenvalues of Qhs vanish.
/// Eigenvalues closer than `degeneracyTol` (relative) count as equal.
AveragedSystem average_closed_form(const LinearField& field, double degeneracyTol = 1e-9);

enum class Verdict { UnstableCertified, Inconclusive };

const char* to_string(Verdict v);

struct CertificateOptions {
  double degeneracyTol = 1e-9;
  int quadratureNodes = 4096;
  PeriodOptions period;
};

struct CertificateReport {
  Verdict verdict = Verdict::Inconclusive;
  TheoremConditions conditions;
  AveragedSystem closedForm;
  std::optional<AveragedSystem> quadrature;  ///< present when the drift is periodic
  double quadratureDiscrepancy = 0;          ///< |B1bar_closed - B1bar_quad|
  double maxRealPart = 0;
  std::string reason;
};

CertificateReport instability_certificate(const LinearField& field,
                                          const CertificateOptions& options = {});

/// "key: value" lines.
std::string to_text(const CertificateReport& report);

/// Slow averaged system d zeta/ds = eps (B1bar + 3/(eps s + T0) B2bar) zeta.
OdeTrajectory integrate_average(const AveragedSystem& avg, const Vector& zeta0, double T0,
                                double epsilon, double sEnd, const StepOptions& opts = {});

}  // namespace nagflow
