#include "generators.hpp"
#include "nagflow/errors.hpp"
#include "nagflow/hybrid.hpp"

#include <doctest.h>

#include <cmath>

using namespace nagflow;

namespace {

Matrix example() {
  Matrix q(2, 2);
  q << 100, 5, -5, 100;
  return q;
}

const FieldConstants kExample{100, 100, 5};

struct OracleConstants {
  double a, b, c, delta, cU, cL, lam, mu, nu, rho, Tl, Tu;
};

OracleConstants oracle(double kappa, double ellJ, double ellK, double T0, double T, double eta) {
  OracleConstants o{};
  o.b = 3 - eta;
  o.a = 2 * eta * o.b / (T * T);
  o.c = 3 * o.a * (1 - eta) / (2 * eta * o.b * o.b);
  o.delta = 2 / (T * T);
  const double m = o.delta / 2;
  o.cU = std::max(o.a + o.a * T / o.b + o.delta * T * T * ellJ / 2, m * T * T + o.a * T / o.b);
  o.cL = T0 * T0 * std::min(o.c, o.delta * kappa / 2);
  o.lam = std::min(2 * o.c * (3 - eta), o.a * kappa / o.b);
  o.Tl = std::sqrt(T0 * T0 + 4 * eta * eta / kappa);
  o.Tu = ellK > 0 ? 2 * std::min(3 * (1 - eta), kappa * eta) / ellK : INFINITY;
  o.mu = ellK > 0 ? o.lam * (o.Tu - T) * T0 / (o.Tu * o.cU) : o.lam * T0 / o.cU;
  const double G = std::sqrt((T * T - T0 * T0) * kappa);
  o.nu = std::min(1 - 2 * eta / G, G * (G - 2 * eta) / (T * T));
  o.rho = -std::log(1 - o.nu / o.cU) + o.mu * (T - T0);
  return o;
}

HybridTrajectory example_run(double T, double tEnd = 10.0, std::size_t stride = 1) {
  const LinearField f = helmholtz_split(example());
  HybridOptions o;
  o.stride = stride;
  const Vector q0 = (Vector(2) << 1e4, -1e4).finished();
  return simulate_hybrid(f, {0.1, T, 0.5}, {q0, q0, 0.1}, tEnd, o);
}

}  // namespace

TEST_CASE("restart config validation") {
  CHECK_NOTHROW(RestartConfig{0.1, 0.471, 0.5}.validate());
  CHECK_NOTHROW(RestartConfig{0.1, 0.471, 1.0}.validate());
  CHECK_THROWS_AS(RestartConfig({0.1, 0.1, 0.5}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(RestartConfig({0.0, 0.5, 0.5}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(RestartConfig({0.1, 0.5, 0.0}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(RestartConfig({0.1, 0.5, 1.5}).validate(), std::invalid_argument);
  CHECK(RestartConfig{0.1, 0.471, 0.5}.flowLength() == doctest::Approx(0.742));
}

TEST_CASE("certificate constants for the 2x2 example") {
  const LyapunovCertificate c = lyapunov_certificate(kExample, {0.1, 0.471, 0.5});
  const OracleConstants o = oracle(100, 100, 5, 0.1, 0.471, 0.5);
  CHECK(c.b == 2.5);
  CHECK(c.a == doctest::Approx(o.a).epsilon(1e-13));
  CHECK(c.c == doctest::Approx(o.c).epsilon(1e-13));
  CHECK(c.delta == doctest::Approx(o.delta).epsilon(1e-12));
  CHECK(c.delta == doctest::Approx(c.a / (c.config.eta * c.b)).epsilon(1e-12));
  CHECK(c.m == doctest::Approx(c.delta / 2));
  CHECK(c.cUpper == doctest::Approx(o.cU).epsilon(1e-13));
  CHECK(c.cLower == doctest::Approx(o.cL).epsilon(1e-13));
  CHECK(c.lambda == doctest::Approx(o.lam).epsilon(1e-13));
  CHECK(c.mu == doctest::Approx(o.mu).epsilon(1e-12));
  CHECK(c.nu == doctest::Approx(o.nu).epsilon(1e-13));
  CHECK(c.rho == doctest::Approx(o.rho).epsilon(1e-12));
  CHECK(c.Tlower == doctest::Approx(std::sqrt(0.02)).epsilon(1e-14));
  CHECK(c.Tupper == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(c.admissible);
  CHECK(c.a == doctest::Approx(11.2693).epsilon(1e-5));
  CHECK(c.cUpper == doctest::Approx(113.392).epsilon(1e-5));
}

TEST_CASE("reset window enforcement") {
  CHECK_THROWS_AS(lyapunov_certificate(kExample, {0.1, 0.141, 0.5}), WindowViolation);
  CHECK_THROWS_AS(lyapunov_certificate(kExample, {0.1, 0.7, 0.5}), WindowViolation);
  CHECK_THROWS_AS(lyapunov_certificate(kExample, {0.1, std::sqrt(0.02), 0.5}), WindowViolation);
  CHECK_NOTHROW(lyapunov_certificate(kExample, {0.1, 0.6, 0.5}));
  CHECK_THROWS_AS(lyapunov_certificate(kExample, {0.1, 0.3, 1.0}), WindowViolation);
  const LyapunovCertificate forced = lyapunov_constants(kExample, {0.1, 0.9, 0.5});
  CHECK_FALSE(forced.admissible);
  CHECK(forced.mu < 0);
  const LyapunovCertificate cons = lyapunov_certificate({100, 100, 0}, {0.1, 50.0, 0.5});
  CHECK(std::isinf(cons.Tupper));
  CHECK(cons.mu == doctest::Approx(cons.lambda * 0.1 / cons.cUpper));
}

TEST_CASE("property: admissible configs give nu in (0,1) and rho > 0") {
  testgen::Gen g(31);
  int checked = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const FieldConstants k{g.uniform(0.5, 200), 0, g.uniform(0, 5)};
    const FieldConstants kk{k.kappaJ, k.kappaJ * g.uniform(1, 5), k.ellK};
    const RestartConfig cfg{g.uniform(0.01, 0.5), 0, g.uniform(0.05, 0.95)};
    const LyapunovCertificate probe = lyapunov_constants(kk, {cfg.T0, cfg.T0 + 1, cfg.eta});
    const double hi = std::min(probe.Tupper, probe.Tlower * 4);
    if (!(hi > probe.Tlower)) continue;
    const double T = g.uniform(probe.Tlower, hi) + 1e-9;
    const LyapunovCertificate c = lyapunov_constants(kk, {cfg.T0, std::min(T, hi), cfg.eta});
    if (!c.admissible) continue;
    ++checked;
    CHECK(c.nu > 0);
    CHECK(c.nu < 1);
    CHECK(c.rho > 0);
    CHECK(c.mu >= 0);
    CHECK(c.cLower <= c.cUpper);
  }
  CHECK(checked > 100);
}

TEST_CASE("property: Lyapunov sandwich") {
  testgen::Gen g(32);
  for (int field = 0; field < 5; ++field) {
    const Index n = g.integer(1, 4);
    Vector eigs(n);
    for (Index i = 0; i < n; ++i) eigs(i) = g.uniform(1, 50);
    const LinearField lf = helmholtz_split(g.with_spectrum(eigs) + g.skew(n, 1.0));
    const GeneralField gf = field % 2 ? arctan_field(lf, 1.5) : as_general(lf);
    const RestartConfig cfg{0.1, 0.1 + g.uniform(0.1, 1.0), 0.5};
    const LyapunovCertificate c = lyapunov_constants(constants_of(gf), cfg);
    for (int k = 0; k < 1000; ++k) {
      const HybridState chi{g.in_ball(n, 10), g.in_ball(n, 10), g.uniform(cfg.T0, cfg.T)};
      const double V = lyapunov_value(c, gf, chi);
      const double d2 = (chi.q - gf.xStar).squaredNorm() + chi.p.squaredNorm();
      CHECK(V >= c.cLower * d2 * (1 - 1e-12));
      CHECK(V <= c.cUpper * d2 * (1 + 1e-12));
    }
    CHECK(lyapunov_value(c, gf, HybridState{gf.xStar, Vector::Zero(n), cfg.T}) == 0);
  }
}

TEST_CASE("hybrid trajectory structure") {
  const double T = 0.471, T0 = 0.1, eta = 0.5, L = (T - T0) / eta;
  const HybridTrajectory tr = example_run(T);
  REQUIRE(tr.jumps() == 13);
  CHECK_FALSE(tr.blewUp);
  for (std::size_t idx : tr.jumpIndices) {
    const auto& post = tr.samples[idx];
    const auto& pre = tr.samples[idx - 1];
    CHECK(post.p.norm() == 0);
    CHECK(post.tau == T0);
    CHECK(pre.tau == T);
    CHECK(post.t == pre.t);
    CHECK(post.j == pre.j + 1);
    CHECK((post.q - pre.q).norm() == 0);
  }
  for (std::size_t k = 1; k < tr.jumpIndices.size(); ++k) {
    const double dt = tr.samples[tr.jumpIndices[k]].t - tr.samples[tr.jumpIndices[k - 1]].t;
    CHECK(std::abs(dt - L) <= tr.step);
  }
  for (std::size_t k = 0; k < tr.samples.size(); ++k) {
    const auto& s = tr.samples[k];
    CHECK(s.j <= eta * s.t / (T - T0) + 1);
    CHECK(s.tau >= T0);
    CHECK(s.tau <= T);
    if (k) {
      const auto& prev = tr.samples[k - 1];
      CHECK((s.t > prev.t || (s.t == prev.t && s.j == prev.j + 1)));
      if (s.j == prev.j) CHECK((s.tau - prev.tau) == doctest::Approx(eta * (s.t - prev.t)).epsilon(1e-9));
    }
  }
  const double d0 = tr.samples.front().q.norm(), d1 = tr.samples.back().q.norm();
  CHECK(d1 < 1);
  CHECK(d1 < 1e-6 * d0);
}

TEST_CASE("hybrid edge starts") {
  const LinearField f = helmholtz_split(example());
  const RestartConfig cfg{0.1, 0.471, 0.5};
  SUBCASE("equilibrium") {
    const HybridTrajectory tr = simulate_hybrid(f, cfg, {Vector::Zero(2), Vector::Zero(2), 0.1}, 5.0);
    for (const auto& s : tr.samples) {
      CHECK(s.q.norm() == 0);
      CHECK(s.p.norm() == 0);
    }
    const LyapunovCertificate c = lyapunov_certificate(constants_of(f), cfg);
    CHECK(verify_decrease(as_general(f), c, tr).passed());
    CHECK(verify_envelopes(as_general(f), c, tr).passed());
  }
  SUBCASE("start on the jump set") {
    const Vector q0 = Vector::Ones(2);
    const HybridTrajectory tr = simulate_hybrid(f, cfg, {q0, q0, cfg.T}, 2.0);
    REQUIRE(tr.jumps() >= 1);
    CHECK(tr.jumpIndices.front() == 1);
    CHECK(tr.samples[1].t == 0);
    CHECK(tr.samples[1].p.norm() == 0);
  }
  SUBCASE("start mid-interval") {
    const Vector q0 = Vector::Ones(2);
    const HybridTrajectory tr = simulate_hybrid(f, cfg, {q0, q0, 0.3}, 2.0);
    REQUIRE(tr.jumps() >= 1);
    CHECK(tr.samples[tr.jumpIndices.front()].t == doctest::Approx((0.471 - 0.3) / 0.5));
  }
  SUBCASE("bad tau0") {
    CHECK_THROWS_AS(simulate_hybrid(f, cfg, {Vector::Ones(2), Vector::Ones(2), 0.05}, 1.0),
                    std::invalid_argument);
  }
}

TEST_CASE("decrease and envelope checks on the example") {
  const GeneralField g = as_general(helmholtz_split(example()));
  const LyapunovCertificate c = lyapunov_certificate(kExample, {0.1, 0.471, 0.5});
  const HybridTrajectory tr = example_run(0.471);
  const DecreaseReport d = verify_decrease(g, c, tr);
  CHECK(d.flowChecks > 9000);
  CHECK(d.flowViolations == 0);
  CHECK(d.jumpChecks == 13);
  CHECK(d.jumpViolations == 0);
  CHECK(d.contractionChecks == 13);
  CHECK(d.contractionViolations == 0);
  CHECK(d.worstContractionRatio <= std::exp(-c.rho));
  const EnvelopeReport e = verify_envelopes(g, c, tr);
  CHECK(e.passed());
  CHECK(e.samplesChecked == tr.samples.size());
  CHECK(e.MJ == doctest::Approx(0.5 * lyapunov_value(c, g, tr.samples.front())));
  CHECK(e.c2 > 0);
  CHECK(e.c1 >= 1);
}

TEST_CASE("forced inadmissible period is reported, not certified") {
  const GeneralField g = as_general(helmholtz_split(example()));
  const LyapunovCertificate c = lyapunov_constants(kExample, {0.1, 0.9, 0.5});
  const HybridTrajectory tr = example_run(0.9);
  const DecreaseReport d = verify_decrease(g, c, tr);
  CHECK(d.flowChecks > 0);
  CHECK_FALSE(c.admissible);
  CHECK(to_text(d).find("flow_violations: ") != std::string::npos);
}

TEST_CASE("conservative field with restarts") {
  const LinearField f = helmholtz_split(50 * Matrix::Identity(2, 2));
  const RestartConfig cfg{0.1, 0.5, 0.5};
  const LyapunovCertificate c = lyapunov_certificate(constants_of(f), cfg);
  const Vector q0 = (Vector(2) << 3, -4).finished();
  const HybridTrajectory tr = simulate_hybrid(f, cfg, {q0, Vector::Zero(2), 0.1}, 10.0);
  CHECK(verify_decrease(as_general(f), c, tr).passed());
  CHECK(verify_envelopes(as_general(f), c, tr).passed());
}

TEST_CASE("optimal restart parameter") {
  const OptimalRestart one = optimal_restart(1.0, 0.5, 0.0, 1.0);
  CHECK(one.beta == 1.0);
  CHECK(std::abs(one.xiStar - std::exp(-1.0)) <= 1e-8);
  CHECK(one.Topt == doctest::Approx(one.Tlower / one.xiStar));

  const OptimalRestart small = optimal_restart(1.0, 0.5, 0.0, 1e4);
  CHECK(std::abs(small.xiStar - 0.5) <= 1e-3);

  for (double beta : {0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 1.0}) {
    const OptimalRestart r = optimal_restart(1.0, 0.5, 0.0, 1.0 / beta);
    CHECK(std::abs(restart_optimality(r.beta, r.xiStar)) <= 1e-10);
    CHECK(r.Topt / r.Tlower >= 2.0 - 1e-9);
    CHECK(r.Topt / r.Tlower <= std::exp(1.0) + 1e-9);
  }
  for (double beta : {0.01, 0.1, 0.5, 1.0}) {
    double prev = -INFINITY;
    for (int k = 1; k < 100; ++k) {
      const double v = restart_optimality(beta, k / 100.0);
      CHECK(v > prev);
      prev = v;
    }
  }
  CHECK_THROWS_AS(optimal_restart(100.0, 0.5, 0.1, 0.5), BetaOutOfRange);
  CHECK_THROWS_AS(optimal_restart(1.0, 1.0, 0.1, 10.0), std::invalid_argument);
}

TEST_CASE("optimal restart with certificate-derived bound") {
  const OptimalRestart a = optimal_restart_auto(kExample, 0.5, 0.1, 0);
  const double cU = lyapunov_constants(kExample, {0.1, 2 * a.Tlower, 0.5}).cUpper;
  CHECK(a.cUpper == cU);
  CHECK(a.iterations == 0);
  const OptimalRestart b = optimal_restart_auto(kExample, 0.5, 0.1, 1);
  const double cU1 = lyapunov_constants(kExample, {0.1, a.Topt, 0.5}).cUpper;
  CHECK(b.cUpper == cU1);
  CHECK(b.iterations == 1);
  CHECK(b.Topt / b.Tlower >= 2.0 - 1e-9);
  CHECK(b.Topt / b.Tlower <= std::exp(1.0));
  CHECK(lyapunov_constants(kExample, {0.1, b.Topt, 0.5}).admissible);
}
