#include "nagflow/fields.hpp"

#include "nagflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace nagflow {

namespace {

constexpr double kEigenRelTol = 1e-9;

void require_square_finite(const Matrix& q) {
  if (q.rows() < 1 || q.rows() != q.cols()) {
    throw std::invalid_argument("field matrix must be square with n >= 1");
  }
  if (!q.allFinite()) throw std::invalid_argument("field matrix has non-finite entries");
}

Vector random_point_in_ball(std::mt19937_64& rng, const Vector& center, double radius) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const Index n = center.size();
  Vector dir(n);
  double norm = 0;
  do {
    for (Index i = 0; i < n; ++i) dir(i) = normal(rng);
    norm = dir.norm();
  } while (norm == 0);
  const double r = radius * std::pow(uniform(rng), 1.0 / static_cast<double>(n));
  return center + (r / norm) * dir;
}

}  // namespace

LinearField helmholtz_split(const Matrix& q) {
  require_square_finite(q);

  LinearField f;
  f.q_ = q;
  f.qs_ = 0.5 * (q + q.transpose());
  f.qa_ = 0.5 * (q - q.transpose());

  Eigen::SelfAdjointEigenSolver<Matrix> eig(f.qs_);
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("helmholtz_split: symmetric eigensolver failed");
  }
  f.eigenvalues_ = eig.eigenvalues();
  f.eigenvectors_ = eig.eigenvectors();

  const double lmin = f.eigenvalues_.minCoeff();
  const double lmax = f.eigenvalues_.maxCoeff();
  const double scale = std::max(std::abs(lmin), std::abs(lmax));
  if (!(lmin > kEigenRelTol * scale)) {
    std::ostringstream msg;
    msg << "symmetric part is not positive definite (smallest eigenvalue " << lmin << ")";
    throw NotPositiveDefinite(msg.str());
  }

  f.kappa_j_ = lmin;
  f.ell_j_ = lmax;
  f.ell_k_ = spectral_norm(f.qa_);
  f.alpha_ = f.ell_k_ / std::sqrt(f.ell_j_);
  if (!f.alphaInRange()) {
    std::ostringstream msg;
    msg << "alpha = ellK/sqrt(ellJ) = " << f.alpha_ << " exceeds 1";
    f.warnings_.push_back(msg.str());
  }
  return f;
}

NormalizedParts normalize(const LinearField& field) {
  NormalizedParts out;
  out.qhatS = field.Qs() / field.ellJ();
  if (field.ellK() > 0) {
    out.qhatA = (field.alpha() / field.ellK()) * field.Qa();
  } else {
    out.qhatA = Matrix::Zero(field.dim(), field.dim());
  }
  return out;
}

GeneralField as_general(const LinearField& field) {
  GeneralField g;
  g.dim = field.dim();
  const Matrix qs = field.Qs();
  const Matrix qa = field.Qa();
  g.gradJ = [qs](const Vector& x) -> Vector { return qs * x; };
  g.rotK = [qa](const Vector& x) -> Vector { return qa * x; };
  g.J = [qs](const Vector& x) { return 0.5 * x.dot(qs * x); };
  g.xStar = Vector::Zero(field.dim());
  g.ellJ = field.ellJ();
  g.ellK = field.ellK();
  g.kappaJ = field.kappaJ();
  return g;
}

GeneralField arctan_field(const LinearField& base, double weight) {
  if (!(weight >= 0) || !std::isfinite(weight)) {
    throw std::invalid_argument("arctan_field: weight must be finite and >= 0");
  }
  GeneralField g = as_general(base);
  const Matrix qs = base.Qs();
  g.gradJ = [qs, weight](const Vector& x) -> Vector {
    return qs * x + weight * x.array().atan().matrix();
  };
  g.J = [qs, weight](const Vector& x) {
    double sum = 0.5 * x.dot(qs * x);
    for (Index i = 0; i < x.size(); ++i) {
      sum += weight * (x(i) * std::atan(x(i)) - 0.5 * std::log1p(x(i) * x(i)));
    }
    return sum;
  };
  g.ellJ = base.ellJ() + weight;
  return g;
}

ValidationReport validate_assumption1(const GeneralField& field,
                                      const ValidationOptions& options) {
  if (options.samples < 1) throw std::invalid_argument("validate_assumption1: samples >= 1");
  if (!(options.radius > 0)) throw std::invalid_argument("validate_assumption1: radius > 0");
  if (field.xStar.size() != field.dim) {
    throw std::invalid_argument("validate_assumption1: xStar has wrong dimension");
  }

  ValidationReport report;
  report.samples = options.samples;
  const double tol = options.tolerance;

  const double gj = field.gradJ(field.xStar).norm();
  const double rk = field.rotK(field.xStar).norm();
  report.equilibriumResidual = (field.gradJ(field.xStar) + field.rotK(field.xStar)).norm();
  report.equilibriumOk = gj <= tol && rk <= tol;

  report.monotoneJ.worst = std::numeric_limits<double>::infinity();
  report.monotoneK.worst = std::numeric_limits<double>::infinity();
  report.lipschitzJ.worst = 0;
  report.lipschitzK.worst = 0;

  std::mt19937_64 rng(options.seed);
  for (int k = 0; k < options.samples; ++k) {
    const Vector x1 = random_point_in_ball(rng, field.xStar, options.radius);
    const Vector x2 = random_point_in_ball(rng, field.xStar, options.radius);
    const Vector dx = x1 - x2;
    const double dx2 = dx.squaredNorm();
    if (dx2 == 0) continue;
    const double dxn = std::sqrt(dx2);
    const Vector dg = field.gradJ(x1) - field.gradJ(x2);
    const Vector dr = field.rotK(x1) - field.rotK(x2);

    // Tolerances scale with |dx|^2 (resp. |dx|) so the checks are invariant
    // under the sampling radius.
    const double scaleJ = tol * dx2 * std::max(1.0, field.ellJ);
    const double scaleK = tol * dx2 * std::max(1.0, field.ellK);

    const double mj = dg.dot(dx);
    report.monotoneJ.worst = std::min(report.monotoneJ.worst, mj / dx2);
    if (mj < field.kappaJ * dx2 - scaleJ) report.monotoneJ.passed = false;

    const double mk = dr.dot(dx);
    report.monotoneK.worst = std::min(report.monotoneK.worst, mk / dx2);
    if (mk < -scaleK) report.monotoneK.passed = false;

    const double lj = dg.norm();
    report.lipschitzJ.worst = std::max(report.lipschitzJ.worst, lj / dxn);
    if (lj > field.ellJ * dxn + tol * dxn * std::max(1.0, field.ellJ)) {
      report.lipschitzJ.passed = false;
    }

    const double lk = dr.norm();
    report.lipschitzK.worst = std::max(report.lipschitzK.worst, lk / dxn);
    if (lk > field.ellK * dxn + tol * dxn * std::max(1.0, field.ellK)) {
      report.lipschitzK.passed = false;
    }
  }
  return report;
}

}  // namespace nagflow
