#include "nagflow/averaging.hpp"

#include "nagflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace nagflow {

Rational best_rational(double x, long maxDenominator) {
  if (!(x > 0) || !std::isfinite(x)) throw std::invalid_argument("best_rational: x must be > 0");
  if (maxDenominator < 1) throw std::invalid_argument("best_rational: maxDenominator >= 1");

  // Convergents h_k / k_k of the continued fraction of x.
  long p_prev = 0, q_prev = 1, p = 1, q = 0;
  double r = x;
  Rational best{static_cast<long>(std::llround(x)), 1};
  for (int iter = 0; iter < 64; ++iter) {
    const double a_real = std::floor(r);
    const double q_next_real = a_real * static_cast<double>(q) + static_cast<double>(q_prev);
    if (q_next_real > static_cast<double>(maxDenominator)) {
      // Largest admissible semiconvergent (p_prev + t p) / (q_prev + t q).
      if (q > 0) {
        const long t = (maxDenominator - q_prev) / q;
        const Rational semi{p_prev + t * p, q_prev + t * q};
        const Rational conv{p, q};
        best = std::abs(semi.value() - x) < std::abs(conv.value() - x) ? semi : conv;
      }
      break;
    }
    const long a = static_cast<long>(a_real);
    const long p_next = a * p + p_prev;
    const long q_next = a * q + q_prev;
    p_prev = p;
    q_prev = q;
    p = p_next;
    q = q_next;
    best = {p, q};
    const double frac = r - a_real;
    if (frac <= 1e-15 * std::max(1.0, r)) break;
    r = 1.0 / frac;
  }
  const long g = std::gcd(best.num, best.den);
  if (g > 1) best = {best.num / g, best.den / g};
  return best;
}

PeriodResult period(const DriftGenerator& gen, const PeriodOptions& options) {
  const Vector& lambdas = gen.lambdas;
  if (lambdas.size() == 0 || !(lambdas.minCoeff() > 0)) {
    throw std::invalid_argument("period: frequencies must be positive");
  }
  PeriodResult out;
  out.mu = lambdas.minCoeff();

  std::vector<Rational> fits;
  fits.reserve(static_cast<std::size_t>(lambdas.size()));
  for (Index j = 0; j < lambdas.size(); ++j) {
    const double ratio = lambdas(j) / out.mu;
    const Rational fit = best_rational(ratio, options.maxDenominator);
    if (std::abs(ratio - fit.value()) > options.fitTolerance * ratio) {
      std::ostringstream msg;
      msg << "frequency ratio " << ratio << " has no rational fit with denominator <= "
          << options.maxDenominator;
      throw NotCommensurate(msg.str());
    }
    fits.push_back(fit);
  }

  long L = 1;
  for (const auto& f : fits) L = std::lcm(L, f.den);
  std::vector<long> k;
  long g = 0;
  for (const auto& f : fits) {
    k.push_back(f.num * (L / f.den));
    g = std::gcd(g, k.back());
  }
  for (auto& kj : k) kj /= g;

  out.L = L;
  out.ratios = std::move(k);
  out.omega0 = out.mu * static_cast<double>(g) / static_cast<double>(L);
  out.period = 2.0 * std::numbers::pi / out.omega0;
  return out;
}

namespace {

bool same_eigenvalue(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

void fill_spectrum(AveragedSystem& avg) {
  avg.spectrumB1 = eigenvalues(avg.B1bar);
  avg.maxRealPart = max_real_part(avg.spectrumB1);
}

Matrix block_diag2(const Matrix& p) {
  const Index n = p.rows();
  return block2(p, Matrix::Zero(n, n), Matrix::Zero(n, n), p);
}

std::optional<PeriodResult> try_period(const DriftGenerator& gen, const PeriodOptions& opts) {
  try {
    return period(gen, opts);
  } catch (const NotCommensurate&) {
    return std::nullopt;
  }
}

}  // namespace

TheoremConditions check_conditions(const LinearField& field, double degeneracyTol,
                                   const PeriodOptions& periodOptions) {
  TheoremConditions c;
  const Index n = field.dim();
  const Matrix& qa = field.Qa();

  const double scale = std::max(field.Q().cwiseAbs().maxCoeff(), 1e-300);
  c.offDiagonalNonzero = n >= 2;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i != j && std::abs(qa(i, j)) <= 1e-12 * scale) c.offDiagonalNonzero = false;
    }
  }
  if (!c.offDiagonalNonzero) {
    c.failures.emplace_back(n >= 2 ? "(i) some off-diagonal entry of Qa is zero"
                                   : "(i) n = 1: Qa has no off-diagonal entries");
  }

  const DriftGenerator gen = drift_generator(field);
  c.commensurate = try_period(gen, periodOptions).has_value();
  if (!c.commensurate) c.failures.emplace_back("(ii) eigenvalues of Qs are not commensurate");

  // Eigenvalues are ascending; chain-group neighbours.
  const Vector& q = gen.q;
  Index groupSize = 1;
  for (Index i = 1; i <= q.size(); ++i) {
    if (i < q.size() && same_eigenvalue(q(i), q(i - 1), degeneracyTol)) {
      ++groupSize;
      continue;
    }
    if (groupSize > 1) ++c.repeatedEigenvalues;
    groupSize = 1;
  }
  c.singleDegenerate = c.repeatedEigenvalues == 1;
  if (!c.singleDegenerate) {
    std::ostringstream msg;
    msg << "(iii) Qs has " << c.repeatedEigenvalues
        << " repeated eigenvalues (exactly one required)";
    c.failures.push_back(msg.str());
  }
  return c;
}

AveragedSystem average_quadrature(const LinearField& field, int nodes,
                                  const PeriodOptions& periodOptions) {
  if (nodes < 64 || nodes % 2 != 0) {
    throw std::invalid_argument("average_quadrature: nodes must be even and >= 64");
  }
  const Index n = field.dim();
  const DriftGenerator gen = drift_generator(field);
  const PeriodResult per = period(gen, periodOptions);

  const Matrix B1 = perturbation_matrix(normalize(field).qhatA, 0.0);
  Matrix B2 = Matrix::Zero(2 * n, 2 * n);
  B2.bottomRightCorner(n, n) = -Matrix::Identity(n, n);

  const double h = per.period / nodes;
  std::vector<Matrix> terms1, terms2;
  terms1.reserve(static_cast<std::size_t>(nodes) + 1);
  terms2.reserve(static_cast<std::size_t>(nodes) + 1);
  for (int k = 0; k <= nodes; ++k) {
    const double s = k * h;
    const double w = (k == 0 || k == nodes) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
    const Matrix E = exp_drift(gen, s);
    const Matrix Einv = exp_drift(gen, -s);
    terms1.push_back(w * (Einv * B1 * E));
    terms2.push_back(w * (Einv * B2 * E));
  }

  AveragedSystem avg;
  const double scale = h / 3.0 / per.period;
  avg.B1bar = scale * pairwise_sum(std::move(terms1));
  avg.B2bar = scale * pairwise_sum(std::move(terms2));
  avg.period = per;
  avg.conditions = check_conditions(field, 1e-9, periodOptions);
  fill_spectrum(avg);
  return avg;
}

AveragedSystem average_closed_form(const LinearField& field, double degeneracyTol) {
  const Index n = field.dim();
  const DriftGenerator gen = drift_generator(field);
  const Matrix tilde = gen.P.transpose() * normalize(field).qhatA * gen.P;

  Matrix bar = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i != j && same_eigenvalue(gen.q(i), gen.q(j), degeneracyTol)) bar(i, j) = tilde(i, j);
    }
  }
  const Matrix first = -bar;
  Matrix second = bar;
  for (Index i = 0; i < n; ++i) second.row(i) /= gen.q(i);

  const Matrix diagonalForm = 0.5 * block2(Matrix::Zero(n, n), second, first, Matrix::Zero(n, n));
  const Matrix Phat = block_diag2(gen.P);

  AveragedSystem avg;
  avg.B1bar = Phat * diagonalForm * Phat.transpose();
  avg.B2bar = -0.5 * Matrix::Identity(2 * n, 2 * n);
  avg.period = try_period(gen, {});
  avg.conditions = check_conditions(field, degeneracyTol);
  fill_spectrum(avg);
  return avg;
}

const char* to_string(Verdict v) {
  return v == Verdict::UnstableCertified ? "UNSTABLE-CERTIFIED" : "INCONCLUSIVE";
}

CertificateReport instability_certificate(const LinearField& field,
                                          const CertificateOptions& options) {
  CertificateReport rep;
  rep.closedForm = average_closed_form(field, options.degeneracyTol);
  rep.conditions = check_conditions(field, options.degeneracyTol, options.period);
  rep.closedForm.conditions = rep.conditions;
  rep.maxRealPart = rep.closedForm.maxRealPart;

  if (rep.conditions.commensurate) {
    rep.quadrature = average_quadrature(field, options.quadratureNodes, options.period);
    rep.quadratureDiscrepancy = (rep.quadrature->B1bar - rep.closedForm.B1bar).norm();
  }

  const bool positive = rep.maxRealPart > 1e-12;
  if (rep.conditions.all() && positive) {
    rep.verdict = Verdict::UnstableCertified;
    rep.reason = "all hypotheses hold and the averaged matrix has a positive real eigenvalue";
  } else {
    rep.verdict = Verdict::Inconclusive;
    std::ostringstream msg;
    for (std::size_t i = 0; i < rep.conditions.failures.size(); ++i) {
      if (i) msg << "; ";
      msg << rep.conditions.failures[i];
    }
    if (!positive) {
      if (!rep.conditions.failures.empty()) msg << "; ";
      msg << "no eigenvalue of B1bar with positive real part";
    } else if (!rep.conditions.all()) {
      msg << "; positive real eigenvalue reported as evidence only";
    }
    rep.reason = msg.str();
  }
  return rep;
}

std::string to_text(const CertificateReport& r) {
  std::ostringstream o;
  o.precision(17);
  o << "verdict: " << to_string(r.verdict) << '\n';
  o << "reason: " << r.reason << '\n';
  o << "condition_i_offdiagonal_nonzero: " << (r.conditions.offDiagonalNonzero ? "yes" : "no")
    << '\n';
  o << "condition_ii_commensurate: " << (r.conditions.commensurate ? "yes" : "no") << '\n';
  o << "condition_iii_single_degenerate: " << (r.conditions.singleDegenerate ? "yes" : "no")
    << '\n';
  o << "repeated_eigenvalues: " << r.conditions.repeatedEigenvalues << '\n';
  o << "max_real_part_B1bar: " << r.maxRealPart << '\n';
  o << "spectrum_B1bar:";
  for (const auto& z : r.closedForm.spectrumB1) o << ' ' << z.real() << (z.imag() < 0 ? "-" : "+")
                                                  << std::abs(z.imag()) << 'i';
  o << '\n';
  if (r.closedForm.period) {
    o << "period: " << r.closedForm.period->period << '\n';
    o << "omega0: " << r.closedForm.period->omega0 << '\n';
  }
  if (r.quadrature) {
    o << "quadrature_max_real_part: " << r.quadrature->maxRealPart << '\n';
    o << "quadrature_discrepancy_B1bar: " << r.quadratureDiscrepancy << '\n';
    o << "quadrature_B2bar_deviation: "
      << (r.quadrature->B2bar + 0.5 * Matrix::Identity(r.quadrature->B2bar.rows(),
                                                       r.quadrature->B2bar.cols()))
             .norm()
      << '\n';
  }
  return o.str();
}

OdeTrajectory integrate_average(const AveragedSystem& avg, const Vector& zeta0, double T0,
                                double epsilon, double sEnd, const StepOptions& opts) {
  if (zeta0.size() != avg.B1bar.rows()) {
    throw std::invalid_argument("integrate_average: zeta0 has wrong dimension");
  }
  if (!(T0 > 0)) throw std::invalid_argument("integrate_average: T0 must be positive");
  if (!(epsilon > 0)) throw std::invalid_argument("integrate_average: epsilon must be positive");
  auto rhs = [&](double s, const Vector& z) -> Vector {
    const double d = 3.0 / (epsilon * s + T0);
    return epsilon * (avg.B1bar * z + d * (avg.B2bar * z));
  };
  OdeTrajectory traj = integrate_rk4(rhs, 0.0, zeta0, sEnd, opts, Timescale::s);
  traj.epsilon = epsilon;
  return traj;
}

}  // namespace nagflow
