#include "nagflow/odesim.hpp"

#include "nagflow/errors.hpp"

#include <algorithm>
#include <cmath>

namespace nagflow {

const char* to_string(Timescale ts) {
  switch (ts) {
    case Timescale::t: return "t";
    case Timescale::tau: return "tau";
    case Timescale::s: return "s";
  }
  return "?";
}

std::size_t snapped_steps(double span, double h) {
  const double raw = span / h;
  // Absorb rounding so that span = k*h does not become k+1 steps.
  const double n = std::ceil(raw - 1e-9 * std::max(1.0, raw));
  return static_cast<std::size_t>(std::max(1.0, n));
}

OdeTrajectory integrate_nesterov_t(const GeneralField& field, const Vector& x0,
                                   const Vector& v0, double T0, double eta, double tEnd,
                                   const StepOptions& opts) {
  const Index n = field.dim;
  if (x0.size() != n || v0.size() != n) {
    throw std::invalid_argument("integrate_nesterov_t: initial condition has wrong dimension");
  }
  if (!(T0 > 0)) throw std::invalid_argument("integrate_nesterov_t: T0 must be positive");
  if (!(eta > 0 && eta <= 1)) throw std::invalid_argument("integrate_nesterov_t: eta in (0,1]");

  // tau is a known affine function of t; it is carried in the state only for output.
  Vector y0(2 * n + 1);
  y0 << x0, v0, T0;
  auto rhs = [&](double t, const Vector& y) -> Vector {
    const double tau = eta * t + T0;
    Vector dy(2 * n + 1);
    dy.head(n) = y.segment(n, n);
    dy.segment(n, n) = -(3.0 / tau) * y.segment(n, n) - field(y.head(n));
    dy(2 * n) = eta;
    return dy;
  };
  OdeTrajectory traj = integrate_rk4(rhs, 0.0, y0, tEnd, opts, Timescale::t);
  for (std::size_t k = 0; k < traj.size(); ++k) traj.states[k](2 * n) = eta * traj.times[k] + T0;
  return traj;
}

OdeTrajectory integrate_nesterov_t(const LinearField& field, const Vector& x0,
                                   const Vector& v0, double T0, double eta, double tEnd,
                                   const StepOptions& opts) {
  return integrate_nesterov_t(as_general(field), x0, v0, T0, eta, tEnd, opts);
}

Matrix perturbation_matrix(const Matrix& qhatA, double damping) {
  const Index n = qhatA.rows();
  return block2(Matrix::Zero(n, n), Matrix::Zero(n, n), -qhatA,
                -damping * Matrix::Identity(n, n));
}

double time_scale_epsilon(const LinearField& field) { return 1.0 / std::sqrt(field.ellJ()); }

OdeTrajectory integrate_scaled_y(const LinearField& field, const Vector& y0, double T0,
                                 double gamma, double sEnd, const StepOptions& opts,
                                 bool damping) {
  const Index n = field.dim();
  if (y0.size() != 2 * n) throw std::invalid_argument("integrate_scaled_y: y0 must have size 2n");
  if (!(T0 > 0)) throw std::invalid_argument("integrate_scaled_y: T0 must be positive");
  if (!(gamma > 0 && gamma <= 1)) throw std::invalid_argument("integrate_scaled_y: gamma in (0,1]");

  const auto parts = normalize(field);
  const double eps = time_scale_epsilon(field);
  const Matrix fast = block2(Matrix::Zero(n, n), Matrix::Identity(n, n), -gamma * parts.qhatS,
                             Matrix::Zero(n, n));
  const Matrix coupling = -gamma * parts.qhatA;

  auto rhs = [&](double s, const Vector& y) -> Vector {
    Vector dy = fast * y;
    const double d = damping ? 3.0 / (eps * s + T0) : 0.0;
    dy.tail(n) += eps * (coupling * y.head(n) - d * y.tail(n));
    return dy;
  };
  OdeTrajectory traj = integrate_rk4(rhs, 0.0, y0, sEnd, opts, Timescale::s);
  traj.epsilon = eps;
  return traj;
}

DriftGenerator drift_generator(const Matrix& qhatS) {
  if (qhatS.rows() < 1 || qhatS.rows() != qhatS.cols() || !qhatS.allFinite()) {
    throw std::invalid_argument("drift_generator: Qhs must be square and finite");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (qhatS + qhatS.transpose()));
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("drift_generator: symmetric eigensolver failed");
  }
  DriftGenerator gen;
  const Index n = qhatS.rows();
  gen.P = eig.eigenvectors();
  gen.q = eig.eigenvalues();
  if (!(gen.q.minCoeff() > 0)) {
    throw NotPositiveDefinite("drift_generator: Qhs is not positive definite");
  }
  gen.lambdas = gen.q.cwiseSqrt();
  gen.A = block2(Matrix::Zero(n, n), Matrix::Identity(n, n), -qhatS, Matrix::Zero(n, n));
  return gen;
}

DriftGenerator drift_generator(const LinearField& field) {
  return drift_generator(normalize(field).qhatS);
}

Matrix exp_drift(const DriftGenerator& gen, double s) {
  const Index n = gen.dim();
  // Diagonal-coordinate exponential, then conjugate blockwise by P.
  Vector c(n), s1(n), s2(n);
  for (Index k = 0; k < n; ++k) {
    const double l = gen.lambdas(k);
    const double sn = std::sin(l * s);
    c(k) = std::cos(l * s);
    s1(k) = l * sn;
    s2(k) = sn / l;
  }
  const Matrix& P = gen.P;
  const Matrix pc = P * c.asDiagonal() * P.transpose();
  const Matrix ps1 = P * s1.asDiagonal() * P.transpose();
  const Matrix ps2 = P * s2.asDiagonal() * P.transpose();
  return block2(pc, ps2, -ps1, pc);
}

OdeTrajectory integrate_drift(const DriftGenerator& gen, const Vector& psi0, double sEnd,
                              const StepOptions& opts) {
  if (psi0.size() != 2 * gen.dim()) {
    throw std::invalid_argument("integrate_drift: psi0 must have size 2n");
  }
  auto rhs = [&](double, const Vector& psi) -> Vector { return gen.A * psi; };
  return integrate_rk4(rhs, 0.0, psi0, sEnd, opts, Timescale::s);
}

OdeTrajectory integrate_pullback(const LinearField& field, const Vector& z0, double T0,
                                 double sEnd, const StepOptions& opts, bool damping) {
  const Index n = field.dim();
  if (z0.size() != 2 * n) throw std::invalid_argument("integrate_pullback: z0 must have size 2n");
  if (!(T0 > 0)) throw std::invalid_argument("integrate_pullback: T0 must be positive");

  const DriftGenerator gen = drift_generator(field);
  const Matrix qhatA = normalize(field).qhatA;
  const double eps = time_scale_epsilon(field);

  auto rhs = [&](double s, const Vector& z) -> Vector {
    const double d = damping ? 3.0 / (eps * s + T0) : 0.0;
    const Matrix B = perturbation_matrix(qhatA, d);
    // e^{-As} = exp_drift(-s); apply right to left to stay matrix-vector.
    const Vector w = exp_drift(gen, s) * z;
    return eps * (exp_drift(gen, -s) * (B * w));
  };
  OdeTrajectory traj = integrate_rk4(rhs, 0.0, z0, sEnd, opts, Timescale::s);
  traj.epsilon = eps;
  return traj;
}

}  // namespace nagflow
