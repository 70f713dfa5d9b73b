#include "nagflow/hybrid.hpp"

#include "nagflow/errors.hpp"
#include "nagflow/odesim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace nagflow {

void RestartConfig::validate() const {
  if (!(T0 > 0) || !std::isfinite(T0)) throw std::invalid_argument("restart config: T0 must be > 0");
  if (!(T > T0) || !std::isfinite(T)) throw std::invalid_argument("restart config: T must exceed T0");
  if (!(eta > 0 && eta <= 1)) throw std::invalid_argument("restart config: eta must lie in (0, 1]");
}

namespace {

struct FlowDerivative {
  Vector dq;
  Vector dp;
};

bool exploded(const Vector& q, const Vector& p, double cap) {
  if (!q.allFinite() || !p.allFinite()) return true;
  return std::sqrt(q.squaredNorm() + p.squaredNorm()) > cap;
}

}  // namespace

HybridTrajectory simulate_hybrid(const GeneralField& field, const RestartConfig& cfg,
                                 const HybridState& chi0, double tEnd, const HybridOptions& opts) {
  cfg.validate();
  const Index n = field.dim;
  if (chi0.q.size() != n || chi0.p.size() != n) {
    throw std::invalid_argument("simulate_hybrid: initial state has wrong dimension");
  }
  if (!(chi0.tau >= cfg.T0 && chi0.tau <= cfg.T)) {
    throw std::invalid_argument("simulate_hybrid: tau0 must lie in [T0, T]");
  }
  if (!(tEnd > 0)) throw std::invalid_argument("simulate_hybrid: tEnd must be positive");
  if (!(opts.h > 0)) throw std::invalid_argument("simulate_hybrid: step must be positive");
  const std::size_t stride = opts.stride == 0 ? 1 : opts.stride;

  const double fullSpan = cfg.flowLength();
  const std::size_t fullSteps = snapped_steps(fullSpan, opts.h);
  const double firstSpan = (cfg.T - chi0.tau) / cfg.eta;
  const double timeTol = 1e-12 * std::max(1.0, tEnd);

  HybridTrajectory traj;
  traj.step = fullSpan / static_cast<double>(fullSteps);

  Vector q = chi0.q;
  Vector p = chi0.p;
  traj.samples.push_back({0.0, 0, q, p, chi0.tau});

  auto flow = [&](double tau, const Vector& qq, const Vector& pp) -> FlowDerivative {
    return {pp, -(3.0 / tau) * pp - field(qq)};
  };

  int j = 0;
  double tauStart = chi0.tau;
  while (true) {
    const double tStart = (j == 0) ? 0.0 : firstSpan + (j - 1) * fullSpan;
    const double span = (j == 0) ? firstSpan : fullSpan;
    const std::size_t steps =
        span <= 0 ? 0 : (j == 0 && tauStart != cfg.T0 ? snapped_steps(span, opts.h) : fullSteps);
    const double h = steps == 0 ? 0.0 : span / static_cast<double>(steps);

    bool reachedEnd = false;
    for (std::size_t k = 0; k < steps; ++k) {
      const double tk = tStart + static_cast<double>(k) * h;
      if (tk + h > tEnd + timeTol) {
        reachedEnd = true;
        break;
      }
      const double tau0 = tauStart + cfg.eta * (static_cast<double>(k) * h);
      const double tauMid = tau0 + 0.5 * cfg.eta * h;
      const double tau1 = tauStart + cfg.eta * (static_cast<double>(k + 1) * h);

      const auto k1 = flow(tau0, q, p);
      const auto k2 = flow(tauMid, q + (0.5 * h) * k1.dq, p + (0.5 * h) * k1.dp);
      const auto k3 = flow(tauMid, q + (0.5 * h) * k2.dq, p + (0.5 * h) * k2.dp);
      const auto k4 = flow(tau1, q + h * k3.dq, p + h * k3.dp);
      q += (h / 6.0) * (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq);
      p += (h / 6.0) * (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp);

      const bool last = k + 1 == steps;
      const bool blew = exploded(q, p, opts.blowUpCap);
      if (blew && (!q.allFinite() || !p.allFinite())) {
        traj.blewUp = true;
        return traj;
      }
      if ((k + 1) % stride == 0 || last || blew) {
        const double t = last ? tStart + span : tStart + static_cast<double>(k + 1) * h;
        traj.samples.push_back({t, j, q, p, last ? cfg.T : tau1});
      }
      if (blew) {
        traj.blewUp = true;
        return traj;
      }
    }
    if (reachedEnd) break;

    const double tJump = tStart + span;
    if (tJump > tEnd + timeTol) break;
    if (steps == 0) {
      // Started on the jump set; the pre-jump sample is the initial one.
      traj.samples.back().tau = cfg.T;
    }
    p.setZero();
    ++j;
    traj.samples.push_back({tJump, j, q, p, cfg.T0});
    traj.jumpIndices.push_back(traj.samples.size() - 1);
    tauStart = cfg.T0;
    if (tJump + fullSpan > tEnd + timeTol && tJump >= tEnd - timeTol) break;
  }
  return traj;
}

HybridTrajectory simulate_hybrid(const LinearField& field, const RestartConfig& cfg,
                                 const HybridState& chi0, double tEnd, const HybridOptions& opts) {
  return simulate_hybrid(as_general(field), cfg, chi0, tEnd, opts);
}

FieldConstants constants_of(const LinearField& field) {
  return {field.kappaJ(), field.ellJ(), field.ellK()};
}

FieldConstants constants_of(const GeneralField& field) {
  return {field.kappaJ, field.ellJ, field.ellK};
}

LyapunovCertificate lyapunov_constants(const FieldConstants& k, const RestartConfig& cfg) {
  if (!(k.kappaJ > 0) || !(k.ellJ > 0) || !(k.ellK >= 0)) {
    throw std::invalid_argument("lyapunov_constants: need kappaJ > 0, ellJ > 0, ellK >= 0");
  }
  if (!(cfg.T0 >= 0) || !(cfg.T > cfg.T0) || !(cfg.eta > 0 && cfg.eta <= 1)) {
    throw std::invalid_argument("lyapunov_constants: need 0 <= T0 < T and eta in (0, 1]");
  }
  const double eta = cfg.eta, T0 = cfg.T0, T = cfg.T;

  LyapunovCertificate c;
  c.config = cfg;
  c.constants = k;
  c.b = 3.0 - eta;
  c.a = 2.0 * eta * c.b / (T * T);
  c.c = 3.0 * c.a * (1.0 - eta) / (2.0 * eta * c.b * c.b);
  c.delta = c.a / (eta * c.b);
  c.m = c.delta / 2.0;
  c.cUpper = std::max(c.a + c.a * T / c.b + c.delta * T * T * k.ellJ / 2.0,
                      c.m * T * T + c.a * T / c.b);
  c.cLower = T0 * T0 * std::min(c.c, c.delta * k.kappaJ / 2.0);
  c.lambda = std::min(2.0 * c.c * (3.0 - eta), c.a * k.kappaJ / c.b);

  c.Tlower = std::sqrt(T0 * T0 + 4.0 * eta * eta / k.kappaJ);
  if (k.ellK > 0) {
    c.Tupper = 2.0 * std::min(3.0 * (1.0 - eta), k.kappaJ * eta) / k.ellK;
    c.mu = c.lambda * (c.Tupper - T) * T0 / (c.Tupper * c.cUpper);
  } else {
    c.Tupper = std::numeric_limits<double>::infinity();
    c.mu = c.lambda * T0 / c.cUpper;
  }

  c.Gamma = std::sqrt((T * T - T0 * T0) * k.kappaJ);
  c.nu1 = 1.0 - 2.0 * eta / c.Gamma;
  c.nu2 = c.Gamma * (c.Gamma - 2.0 * eta) / (T * T);
  c.nu = std::min(c.nu1, c.nu2);
  c.rho = -std::log(1.0 - c.nu / c.cUpper) + c.mu * (T - T0);

  c.admissible = eta > 0 && eta < 1 && T > c.Tlower && T <= c.Tupper;
  return c;
}

LyapunovCertificate lyapunov_certificate(const FieldConstants& k, const RestartConfig& cfg) {
  LyapunovCertificate c = lyapunov_constants(k, cfg);
  if (!c.admissible) {
    std::ostringstream msg;
    msg.precision(10);
    if (!(cfg.eta < 1)) {
      msg << "eta = " << cfg.eta << " must lie in (0, 1) for the certificate";
    } else {
      msg << "T = " << cfg.T << " outside the admissible window (" << c.Tlower << ", "
          << c.Tupper << "]";
    }
    throw WindowViolation(msg.str());
  }
  return c;
}

double lyapunov_value(const LyapunovCertificate& cert, const GeneralField& field,
                      const HybridState& chi) {
  const Vector e = chi.q - field.xStar;
  const double tau = chi.tau;
  const Vector mixed = e + (tau / cert.b) * chi.p;
  return cert.a * mixed.squaredNorm() + cert.c * tau * tau * chi.p.squaredNorm() +
         cert.delta * tau * tau * field.Jtilde(chi.q);
}

double lyapunov_value(const LyapunovCertificate& cert, const GeneralField& field,
                      const HybridSample& s) {
  return lyapunov_value(cert, field, HybridState{s.q, s.p, s.tau});
}

double distance_to_attractor_sq(const GeneralField& field, const HybridSample& s) {
  return (s.q - field.xStar).squaredNorm() + s.p.squaredNorm();
}

DecreaseReport verify_decrease(const GeneralField& field, const LyapunovCertificate& cert,
                               const HybridTrajectory& traj) {
  DecreaseReport rep;
  rep.contractionBound = std::exp(-cert.rho);
  const auto& S = traj.samples;
  if (S.empty()) return rep;

  std::vector<double> V(S.size());
  for (std::size_t i = 0; i < S.size(); ++i) V[i] = lyapunov_value(cert, field, S[i]);

  for (std::size_t i = 0; i + 1 < S.size(); ++i) {
    if (S[i].j != S[i + 1].j) continue;
    const double dt = S[i + 1].t - S[i].t;
    if (!(dt > 0)) continue;
    const double v0 = V[i], v1 = V[i + 1];
    const double lhs = (v1 - v0) / dt;
    const double rhs = -cert.mu * v0 + 10.0 * dt * std::max(v0, v1);
    ++rep.flowChecks;
    if (lhs > rhs) ++rep.flowViolations;
    if (v0 > 0) rep.worstFlowMargin = std::max(rep.worstFlowMargin, (lhs - rhs) / v0);
  }

  const double jumpFactor = cert.nu / cert.cUpper;
  for (std::size_t idx : traj.jumpIndices) {
    if (idx == 0) continue;
    const double before = V[idx - 1], after = V[idx];
    ++rep.jumpChecks;
    if (after - before > -jumpFactor * before + 1e-9 * before) ++rep.jumpViolations;
    if (before > 0) {
      rep.worstJumpMargin = std::max(rep.worstJumpMargin, (after - before) / before + jumpFactor);
    }
  }

  // Interval-start values c_j on full flow intervals (tau starts at T0).
  std::vector<std::size_t> starts;
  if (S.front().tau == cert.config.T0) starts.push_back(0);
  for (std::size_t idx : traj.jumpIndices) starts.push_back(idx);
  for (std::size_t k = 0; k + 1 < starts.size(); ++k) {
    const bool consecutive = S[starts[k + 1]].j == S[starts[k]].j + 1;
    if (!consecutive) continue;
    const double cj = V[starts[k]], cj1 = V[starts[k + 1]];
    ++rep.contractionChecks;
    if (cj1 > rep.contractionBound * cj * (1.0 + 1e-12)) ++rep.contractionViolations;
    if (cj > 0) rep.worstContractionRatio = std::max(rep.worstContractionRatio, cj1 / cj);
  }
  return rep;
}

EnvelopeReport verify_envelopes(const GeneralField& field, const LyapunovCertificate& cert,
                                const HybridTrajectory& traj) {
  EnvelopeReport rep;
  const auto& S = traj.samples;
  if (S.empty()) return rep;
  const auto& k = cert.constants;
  const double T = cert.config.T;

  rep.MJ = 0.5 * lyapunov_value(cert, field, S.front());
  rep.MG = 2.0 * (k.ellJ + k.ellK) * (k.ellJ + k.ellK) * rep.MJ / k.kappaJ;

  for (const auto& s : S) {
    const double shape = T * T * std::exp(-cert.rho * s.j) / (s.tau * s.tau);
    const double jb = rep.MJ * shape;
    const double gb = rep.MG * shape;
    const double jt = field.Jtilde(s.q);
    const double g2 = field(s.q).squaredNorm();
    ++rep.samplesChecked;
    if (jt > jb * (1.0 + 1e-9)) ++rep.jViolations;
    if (g2 > gb * (1.0 + 1e-9)) ++rep.gViolations;
    if (jb > 0) rep.worstJRatio = std::max(rep.worstJRatio, jt / jb);
    if (gb > 0) rep.worstGRatio = std::max(rep.worstGRatio, g2 / gb);
  }

  // Least-squares fit of log|chi|_A against t + j.
  const double d0 = std::sqrt(distance_to_attractor_sq(field, S.front()));
  std::vector<double> xs, ys;
  for (const auto& s : S) {
    const double d = std::sqrt(distance_to_attractor_sq(field, s));
    if (d > 0 && std::isfinite(d)) {
      xs.push_back(s.t + s.j);
      ys.push_back(std::log(d));
    }
  }
  if (xs.size() >= 2 && d0 > 0) {
    const double nx = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      mx += xs[i];
      my += ys[i];
    }
    mx /= nx;
    my /= nx;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    rep.c2 = sxx > 0 ? -sxy / sxx : 0.0;
    double c1 = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      c1 = std::max(c1, std::exp(ys[i] + rep.c2 * xs[i]) / d0);
    }
    rep.c1 = c1;
  }
  return rep;
}

double restart_optimality(double beta, double xi) {
  const double w = 1.0 - beta * (1.0 - xi);
  return std::log(w) + beta * xi / w;
}

OptimalRestart optimal_restart(double kappaJ, double eta, double T0, double cUpper, double tol) {
  if (!(kappaJ > 0)) throw std::invalid_argument("optimal_restart: kappaJ must be positive");
  if (!(eta > 0 && eta < 1)) throw std::invalid_argument("optimal_restart: eta must lie in (0, 1)");
  if (!(T0 >= 0)) throw std::invalid_argument("optimal_restart: T0 must be >= 0");
  if (!(cUpper > 0)) throw std::invalid_argument("optimal_restart: cUpper must be positive");
  if (!(tol > 0)) throw std::invalid_argument("optimal_restart: tol must be positive");

  OptimalRestart r;
  r.cUpper = cUpper;
  r.beta = std::min(1.0, kappaJ) / cUpper;
  if (!(r.beta > 0 && r.beta <= 1)) {
    std::ostringstream msg;
    msg << "beta = " << r.beta << " outside (0, 1]";
    throw BetaOutOfRange(msg.str());
  }

  // The optimality function is strictly increasing with a sign change on (0, 1).
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (restart_optimality(r.beta, mid) < 0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  r.xiStar = 0.5 * (lo + hi);
  r.Tlower = std::sqrt(T0 * T0 + 4.0 * eta * eta / kappaJ);
  r.Topt = r.Tlower / r.xiStar;
  return r;
}

OptimalRestart optimal_restart_auto(const FieldConstants& k, double eta, double T0,
                                    int iterations, double tol) {
  if (iterations < 0) throw std::invalid_argument("optimal_restart_auto: iterations >= 0");
  const double Tl = std::sqrt(T0 * T0 + 4.0 * eta * eta / k.kappaJ);
  double cU = lyapunov_constants(k, {T0, 2.0 * Tl, eta}).cUpper;
  OptimalRestart r = optimal_restart(k.kappaJ, eta, T0, cU, tol);
  for (int i = 0; i < iterations; ++i) {
    cU = lyapunov_constants(k, {T0, r.Topt, eta}).cUpper;
    r = optimal_restart(k.kappaJ, eta, T0, cU, tol);
  }
  r.iterations = iterations;
  return r;
}

std::string to_text(const LyapunovCertificate& c) {
  std::ostringstream o;
  o.precision(17);
  o << "a: " << c.a << "\nb: " << c.b << "\nc: " << c.c << "\ndelta: " << c.delta
    << "\nm: " << c.m << "\nc_lower: " << c.cLower << "\nc_upper: " << c.cUpper
    << "\nlambda: " << c.lambda << "\nmu: " << c.mu << "\nGamma: " << c.Gamma
    << "\nnu1: " << c.nu1 << "\nnu2: " << c.nu2 << "\nnu: " << c.nu << "\nrho: " << c.rho
    << "\nT_lower: " << c.Tlower << "\nT_upper: " << c.Tupper
    << "\nadmissible: " << (c.admissible ? "yes" : "no") << '\n';
  return o.str();
}

std::string to_text(const DecreaseReport& r) {
  std::ostringstream o;
  o.precision(17);
  o << "flow_checks: " << r.flowChecks << "\nflow_violations: " << r.flowViolations
    << "\nworst_flow_margin: " << r.worstFlowMargin << "\njump_checks: " << r.jumpChecks
    << "\njump_violations: " << r.jumpViolations << "\nworst_jump_margin: " << r.worstJumpMargin
    << "\ncontraction_checks: " << r.contractionChecks
    << "\ncontraction_violations: " << r.contractionViolations
    << "\nworst_contraction_ratio: " << r.worstContractionRatio
    << "\ncontraction_bound: " << r.contractionBound
    << "\ndecrease_passed: " << (r.passed() ? "yes" : "no") << '\n';
  return o.str();
}

std::string to_text(const EnvelopeReport& r) {
  std::ostringstream o;
  o.precision(17);
  o << "M_J: " << r.MJ << "\nM_G: " << r.MG << "\nM_J_basis: initial condition (singleton K0)"
    << "\nenvelope_samples: " << r.samplesChecked << "\nJ_envelope_violations: " << r.jViolations
    << "\nG_envelope_violations: " << r.gViolations << "\nworst_J_ratio: " << r.worstJRatio
    << "\nworst_G_ratio: " << r.worstGRatio << "\nuges_c1: " << r.c1 << "\nuges_c2: " << r.c2
    << "\nenvelopes_passed: " << (r.passed() ? "yes" : "no") << '\n';
  return o.str();
}

}  // namespace nagflow
