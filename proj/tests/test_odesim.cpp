#include "generators.hpp"
#include "nagflow/averaging.hpp"
#include "nagflow/errors.hpp"
#include "nagflow/odesim.hpp"

#include <doctest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>

using namespace nagflow;

namespace {

Matrix example() {
  Matrix q(2, 2);
  q << 100, 5, -5, 100;
  return q;
}

// Generic exponential (Pade scaling and squaring) of the block generator.
Matrix oracle_exp(const Matrix& qhatS, double s) {
  const Index n = qhatS.rows();
  Matrix A = Matrix::Zero(2 * n, 2 * n);
  A.topRightCorner(n, n) = Matrix::Identity(n, n);
  A.bottomLeftCorner(n, n) = -qhatS;
  return (A * s).exp();
}

Matrix diag(std::initializer_list<double> v) {
  Vector d(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) d(i++) = x;
  return d.asDiagonal();
}

double max_err_vs_exact(const DriftGenerator& gen, const Vector& psi0, double sEnd, double h) {
  StepOptions o;
  o.h = h;
  const OdeTrajectory tr = integrate_drift(gen, psi0, sEnd, o);
  double err = 0;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    err = std::max(err, (tr.states[k] - exp_drift(gen, tr.times[k]) * psi0).norm());
  }
  return err;
}

}  // namespace

TEST_CASE("step snapping") {
  CHECK(snapped_steps(1.0, 0.1) == 10);
  CHECK(snapped_steps(0.742, 1e-3) == 742);
  CHECK(snapped_steps(1.05, 0.1) == 11);
  CHECK(snapped_steps(1e-6, 0.1) == 1);
}

TEST_CASE("drift generator structure") {
  SUBCASE("identity") {
    const DriftGenerator g = drift_generator(Matrix::Identity(2, 2));
    CHECK((g.lambdas - Vector::Ones(2)).norm() <= 1e-14);
    for (const auto& ev : eigenvalues(g.A)) {
      CHECK(std::abs(ev.real()) <= 1e-12);
      CHECK(std::abs(std::abs(ev.imag()) - 1.0) <= 1e-12);
    }
  }
  SUBCASE("diag(1, 4)") {
    const DriftGenerator g = drift_generator(diag({1, 4}));
    CHECK(g.lambdas(0) == doctest::Approx(1.0));
    CHECK(g.lambdas(1) == doctest::Approx(2.0));
  }
  SUBCASE("scalar") {
    const DriftGenerator g = drift_generator(Matrix::Identity(1, 1));
    Matrix A(2, 2);
    A << 0, 1, -1, 0;
    CHECK((g.A - A).norm() == 0);
  }
  SUBCASE("random orthonormal diagonalization") {
    testgen::Gen gen(11);
    for (int trial = 0; trial < 20; ++trial) {
      const Index n = gen.integer(1, 6);
      Vector eigs(n);
      for (Index i = 0; i < n; ++i) eigs(i) = gen.uniform(0.1, 1.0);
      const Matrix qs = gen.with_spectrum(eigs);
      const DriftGenerator g = drift_generator(qs);
      const Matrix d = g.P.transpose() * qs * g.P;
      Matrix off = d;
      off.diagonal().setZero();
      CHECK(off.cwiseAbs().maxCoeff() <= 1e-9);
      CHECK(g.lambdas.minCoeff() > 0);
      CHECK((g.P.transpose() * g.P - Matrix::Identity(n, n)).norm() <= 1e-12);
    }
  }
  SUBCASE("indefinite input is rejected") {
    CHECK_THROWS_AS(drift_generator(diag({1, -1})), NotPositiveDefinite);
  }
}

TEST_CASE("closed-form exponential") {
  const DriftGenerator id = drift_generator(Matrix::Identity(2, 2));
  CHECK((exp_drift(id, 0.0) - Matrix::Identity(4, 4)).norm() == 0);
  CHECK((exp_drift(id, 2 * M_PI) - Matrix::Identity(4, 4)).norm() <= 1e-14);

  testgen::Gen gen(12);
  for (int trial = 0; trial < 30; ++trial) {
    const Index n = gen.integer(1, 5);
    Vector eigs(n);
    for (Index i = 0; i < n; ++i) eigs(i) = gen.uniform(0.05, 1.0);
    const Matrix qs = gen.with_spectrum(eigs);
    const DriftGenerator g = drift_generator(qs);
    const double s1 = gen.uniform(-10, 10), s2 = gen.uniform(-10, 10);
    const Matrix e1 = exp_drift(g, s1);
    CHECK((e1 - oracle_exp(qs, s1)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((e1 * exp_drift(g, -s1) - Matrix::Identity(2 * n, 2 * n)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((exp_drift(g, s1 + s2) - e1 * exp_drift(g, s2)).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("RK4 drift integration has fourth order") {
  const DriftGenerator g = drift_generator(diag({1, 0.25}));
  const Vector psi0 = (Vector(4) << 0.1, -0.1, 0.05, 0.0).finished();
  const double e1 = max_err_vs_exact(g, psi0, 20.0, 0.1);
  const double e2 = max_err_vs_exact(g, psi0, 20.0, 0.05);
  CHECK(e1 / e2 >= 12);
  CHECK(e1 / e2 <= 20);
  CHECK(max_err_vs_exact(g, psi0, 20.0, 1e-3) <= 1e-10);
}

TEST_CASE("drift orbit closes after one period") {
  testgen::Gen gen(13);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = gen.integer(1, 4);
    const Vector q = gen.commensurate_spectrum(n, 1.0, 4);
    const DriftGenerator g = drift_generator(gen.with_spectrum(q));
    const double T = period(g).period;
    const Vector psi0 = gen.vector(2 * n);
    StepOptions o;
    o.h = 1e-3;
    const OdeTrajectory tr = integrate_drift(g, psi0, T, o);
    CHECK(tr.times.back() == T);
    CHECK((tr.back() - psi0).norm() <= 1e-9 * (1 + psi0.norm()));
    CHECK((exp_drift(g, T) * psi0 - psi0).norm() <= 1e-10 * (1 + psi0.norm()));
  }
  const OdeTrajectory zero = integrate_drift(drift_generator(Matrix::Identity(2, 2)), Vector::Zero(4), 5.0);
  CHECK(zero.back().norm() == 0);
}

TEST_CASE("Nesterov ODE basic behaviour") {
  const LinearField f = helmholtz_split(example());
  SUBCASE("equilibrium is preserved") {
    const OdeTrajectory tr = integrate_nesterov_t(f, Vector::Zero(2), Vector::Zero(2), 0.1, 0.5, 5.0);
    for (const auto& y : tr.states) CHECK(y.head(4).norm() <= 1e-10);
  }
  SUBCASE("tau is exact and times increase") {
    StepOptions o;
    o.stride = 7;
    const OdeTrajectory tr = integrate_nesterov_t(f, Vector::Ones(2), Vector::Zero(2), 0.1, 0.5, 3.0, o);
    CHECK(tr.times.back() == 3.0);
    for (std::size_t k = 0; k < tr.size(); ++k) {
      CHECK(tr.states[k](4) == 0.5 * tr.times[k] + 0.1);
      if (k) CHECK(tr.times[k] > tr.times[k - 1]);
    }
  }
  SUBCASE("rotational example grows without restarts") {
    StepOptions o;
    o.stride = 1000;
    const Vector x0 = (Vector(2) << 1, -1).finished();
    const OdeTrajectory tr = integrate_nesterov_t(f, x0, Vector::Zero(2), 0.1, 0.5, 100.0, o);
    CHECK((tr.blewUp || tr.back().head(2).norm() > 10 * x0.norm()));
  }
  SUBCASE("blow-up cap truncates") {
    StepOptions o;
    o.blowUpCap = 2.0;
    const Vector x0 = (Vector(2) << 1, -1).finished();
    const OdeTrajectory tr = integrate_nesterov_t(f, x0, Vector::Zero(2), 0.1, 0.5, 200.0, o);
    CHECK(tr.blewUp);
    CHECK(tr.times.back() < 200.0);
  }
}

TEST_CASE("conservative Nesterov ODE keeps the t^2 rate") {
  Matrix q(2, 2);
  q << 3, 1, 1, 2;
  const GeneralField g = as_general(helmholtz_split(q));
  const Vector x0 = (Vector(2) << 2, -1).finished();
  StepOptions o;
  o.h = 1e-3;
  const double T0 = 0.1, eta = 1.0;
  const OdeTrajectory tr = integrate_nesterov_t(g, x0, Vector::Zero(2), T0, eta, 10.0, o);
  // Energy E = tau^2 Jtilde + 2 |x + tau v / 2|^2 is nonincreasing for eta = 1.
  double prev = INFINITY, sup = 0;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const Vector x = tr.states[k].head(2), v = tr.states[k].segment(2, 2);
    const double tau = tr.states[k](4);
    const double E = tau * tau * g.Jtilde(x) + 2 * (x + 0.5 * tau * v).squaredNorm();
    CHECK(E <= prev * (1 + 1e-9));
    prev = E;
    sup = std::max(sup, tau * tau * g.Jtilde(x));
  }
  const double E0 = T0 * T0 * g.Jtilde(x0) + 2 * x0.squaredNorm();
  CHECK(sup <= E0 * (1 + 1e-9));
}

TEST_CASE("scaled system checks") {
  const LinearField f = helmholtz_split(example());
  SUBCASE("zero initial state stays zero") {
    const OdeTrajectory tr = integrate_scaled_y(f, Vector::Zero(4), 0.1, 1.0, 50.0);
    CHECK(tr.back().norm() == 0);
    CHECK(tr.epsilon.value() == doctest::Approx(0.1));
  }
  SUBCASE("conservative case dissipates the drift energy") {
    Matrix qs(2, 2);
    qs << 4, 1, 1, 3;
    const LinearField c = helmholtz_split(qs);
    const Matrix qhat = normalize(c).qhatS;
    StepOptions o;
    o.stride = 10;
    const Vector y0 = (Vector(4) << 1, -1, 0.5, 0).finished();
    const OdeTrajectory tr = integrate_scaled_y(c, y0, 0.1, 1.0, 100.0, o);
    double prev = INFINITY;
    for (const auto& y : tr.states) {
      const double E = y.head(2).dot(qhat * y.head(2)) + y.tail(2).squaredNorm();
      CHECK(E <= prev * (1 + 1e-10));
      prev = E;
    }
  }
}

TEST_CASE("pullback is constant without perturbation") {
  Matrix qs(2, 2);
  qs << 4, 0, 0, 1;
  const LinearField c = helmholtz_split(qs);
  const Vector z0 = (Vector(4) << 0.3, -0.2, 0.1, 0.4).finished();
  const OdeTrajectory tr = integrate_pullback(c, z0, 0.1, 20.0, {}, false);
  CHECK((tr.back() - z0).norm() == 0);
}

TEST_CASE("variation of constants: y = exp(As) z") {
  const LinearField f = helmholtz_split(example());
  const DriftGenerator gen = drift_generator(f);
  const Vector y0 = (Vector(4) << 0.1, -0.1, 0, 0).finished();
  auto gap = [&](double h) {
    StepOptions o;
    o.h = h;
    const double sEnd = 10.0;
    const OdeTrajectory y = integrate_scaled_y(f, y0, 0.1, 1.0, sEnd, o);
    const OdeTrajectory z = integrate_pullback(f, y0, 0.1, sEnd, o);
    double g = 0, ymax = 0;
    for (std::size_t k = 0; k < y.size(); ++k) {
      g = std::max(g, (y.states[k] - exp_drift(gen, z.times[k]) * z.states[k]).norm());
      ymax = std::max(ymax, y.states[k].norm());
    }
    return std::pair{g, ymax};
  };
  const auto [fine, ymax] = gap(1e-3);
  CHECK(fine <= 1e-5 * ymax);
  const double e1 = gap(0.2).first, e2 = gap(0.1).first;
  CHECK(std::log2(e1 / e2) >= 3.5);
}
