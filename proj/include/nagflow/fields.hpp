#pragma once

#include "nagflow/linalg.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace nagflow {

/// Linear driving field G(x) = Qx split into its conservative part
/// grad J(x) = Qs x (J(x) = x'Qs x / 2) and rotational part rot K(x) = Qa x.
///
/// Instances are only produced by helmholtz_split() and are immutable.
class LinearField {
 public:
  const Matrix& Q() const { return q_; }
  const Matrix& Qs() const { return qs_; }
  const Matrix& Qa() const { return qa_; }
  /// Lipschitz constant of grad J, i.e. the largest eigenvalue of Qs.
  double ellJ() const { return ell_j_; }
  /// Lipschitz constant of rot K, i.e. the spectral norm of Qa.
  double ellK() const { return ell_k_; }
  /// Strong-monotonicity constant, the smallest eigenvalue of Qs.
  double kappaJ() const { return kappa_j_; }
  /// Scaling ratio ellK / sqrt(ellJ).
  double alpha() const { return alpha_; }
  /// Ascending eigenvalues of Qs with the matching orthonormal eigenvectors.
  const Vector& symmetricEigenvalues() const { return eigenvalues_; }
  const Matrix& symmetricEigenvectors() const { return eigenvectors_; }

  Index dim() const { return q_.rows(); }
  bool alphaInRange() const { return alpha_ <= 1.0 + 1e-12; }
  /// Non-fatal diagnostics (currently only the alpha > 1 case).
  const std::vector<std::string>& warnings() const { return warnings_; }

  Vector operator()(const Vector& x) const { return q_ * x; }

 private:
  friend LinearField helmholtz_split(const Matrix& q);
  LinearField() = default;

  Matrix q_, qs_, qa_;
  Vector eigenvalues_;
  Matrix eigenvectors_;
  double ell_j_ = 0, ell_k_ = 0, kappa_j_ = 0, alpha_ = 0;
  std::vector<std::string> warnings_;
};

/// Split Q into symmetric and skew parts and compute the regularity constants.
/// Throws NotPositiveDefinite when the smallest eigenvalue of Qs is not
/// positive (relative tolerance 1e-9). alpha > 1 is reported as a warning.
LinearField helmholtz_split(const Matrix& q);

struct NormalizedParts {
  Matrix qhatS;  ///< Qs / ellJ
  Matrix qhatA;  ///< alpha * Qa / ellK, zero when ellK == 0
};

NormalizedParts normalize(const LinearField& field);

/// Nonlinear field given by its two Helmholtz parts, a potential for the
/// conservative part, the equilibrium and declared regularity constants.
struct GeneralField {
  Index dim = 0;
  std::function<Vector(const Vector&)> gradJ;
  std::function<Vector(const Vector&)> rotK;
  std::function<double(const Vector&)> J;
  Vector xStar;
  double ellJ = 0;
  double ellK = 0;
  double kappaJ = 0;

  Vector operator()(const Vector& x) const { return gradJ(x) + rotK(x); }
  double Jtilde(const Vector& x) const { return J(x) - J(xStar); }
};

/// View a linear field as a GeneralField with x* = 0 and J(x) = x'Qs x / 2.
GeneralField as_general(const LinearField& field);

/// grad J(q) = Qs q + w * atan(q) (componentwise), rot K(q) = Qa q, x* = 0.
/// Declared constants: kappaJ = lambda_min(Qs), ellJ = lambda_max(Qs) + w,
/// ellK = |Qa|. Requires w >= 0.
GeneralField arctan_field(const LinearField& base, double weight);

struct ValidationOptions {
  int samples = 256;
  double radius = 10.0;
  std::uint64_t seed = 20240531;
  double tolerance = 1e-9;
};

struct ConditionResult {
  double worst = 0;  ///< worst observed ratio over all sampled pairs
  bool passed = true;
};

struct ValidationReport {
  int samples = 0;
  double equilibriumResidual = 0;  ///< |G(x*)|
  bool equilibriumOk = true;
  ConditionResult monotoneJ;  ///< min <dgradJ, dx> / |dx|^2, vs kappaJ
  ConditionResult monotoneK;  ///< min <drotK, dx> / |dx|^2, vs 0
  ConditionResult lipschitzJ;  ///< max |dgradJ| / |dx|, vs ellJ
  ConditionResult lipschitzK;  ///< max |drotK| / |dx|, vs ellK

  bool passed() const {
    return equilibriumOk && monotoneJ.passed && monotoneK.passed && lipschitzJ.passed &&
           lipschitzK.passed;
  }
};

/// Sampled check of strong monotonicity and Lipschitz continuity of both
/// Helmholtz parts on pairs drawn uniformly from the ball of `radius`
/// around x*.
ValidationReport validate_assumption1(const GeneralField& field,
                                      const ValidationOptions& options = {});

}  // namespace nagflow
