#pragma once

#include "nagflow/fields.hpp"
#include "nagflow/linalg.hpp"

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

namespace nagflow {

enum class Timescale { t, tau, s };

const char* to_string(Timescale ts);

/// Sampled solution of a continuous-time system. A blow-up (non-finite state
/// or norm above the cap) truncates the trajectory and sets `blewUp`.
struct OdeTrajectory {
  Timescale timescale = Timescale::t;
  std::vector<double> times;
  std::vector<Vector> states;
  bool blewUp = false;
  double step = 0;                 ///< step actually used after snapping
  std::optional<double> epsilon;   ///< time-scale parameter, when relevant

  std::size_t size() const { return times.size(); }
  const Vector& front() const { return states.front(); }
  const Vector& back() const { return states.back(); }
};

struct StepOptions {
  double h = 1e-3;
  double blowUpCap = 1e12;
  std::size_t stride = 1;  ///< record every stride-th step (the last step is always kept)
};

/// Number of equal steps of size <= h covering `span`.
std::size_t snapped_steps(double span, double h);

/// Classical fixed-step RK4 for y' = f(t, y) on [t0, tEnd]. The step is shrunk
/// to (tEnd - t0) / ceil((tEnd - t0) / h) so tEnd is hit exactly. Stage times
/// are passed to f, so explicitly time-dependent coefficients keep fourth order.
template <class Rhs>
OdeTrajectory integrate_rk4(Rhs&& f, double t0, const Vector& y0, double tEnd,
                            const StepOptions& opts, Timescale ts) {
  if (!(tEnd > t0)) throw std::invalid_argument("integrate_rk4: tEnd must exceed t0");
  if (!(opts.h > 0)) throw std::invalid_argument("integrate_rk4: step must be positive");
  if (!y0.allFinite()) throw std::invalid_argument("integrate_rk4: initial state not finite");
  const std::size_t stride = opts.stride == 0 ? 1 : opts.stride;

  const std::size_t n = snapped_steps(tEnd - t0, opts.h);
  const double h = (tEnd - t0) / static_cast<double>(n);

  OdeTrajectory traj;
  traj.timescale = ts;
  traj.step = h;
  traj.times.reserve(n / stride + 2);
  traj.states.reserve(n / stride + 2);
  traj.times.push_back(t0);
  traj.states.push_back(y0);

  Vector y = y0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = t0 + static_cast<double>(k) * h;
    const Vector k1 = f(t, y);
    const Vector k2 = f(t + 0.5 * h, (y + (0.5 * h) * k1).eval());
    const Vector k3 = f(t + 0.5 * h, (y + (0.5 * h) * k2).eval());
    const Vector k4 = f(t + h, (y + h * k3).eval());
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    const double tn = (k + 1 == n) ? tEnd : t0 + static_cast<double>(k + 1) * h;
    if (!y.allFinite()) {
      traj.blewUp = true;
      break;
    }
    const bool capped = y.norm() > opts.blowUpCap;
    if ((k + 1) % stride == 0 || k + 1 == n || capped) {
      traj.times.push_back(tn);
      traj.states.push_back(y);
    }
    if (capped) {
      traj.blewUp = true;
      break;
    }
  }
  return traj;
}

/// Nesterov's ODE  x'' + (3/tau) x' + G(x) = 0,  tau' = eta, tau(0) = T0, in
/// t-time. States are (x, x', tau) with tau = eta*t + T0 written exactly.
OdeTrajectory integrate_nesterov_t(const GeneralField& field, const Vector& x0,
                                   const Vector& v0, double T0, double eta, double tEnd,
                                   const StepOptions& opts = {});
OdeTrajectory integrate_nesterov_t(const LinearField& field, const Vector& x0,
                                   const Vector& v0, double T0, double eta, double tEnd,
                                   const StepOptions& opts = {});

/// Perturbation matrix [[0, 0], [-qhatA, -damping*I]].
Matrix perturbation_matrix(const Matrix& qhatA, double damping);

/// eps = ellJ^(-1/2).
double time_scale_epsilon(const LinearField& field);

/// Scaled linear system in s-time, y = (x, dx/ds):
///   dy/ds = [[0, I], [-gamma*Qhs, 0]] y + eps [[0, 0], [-gamma*Qha, -3/(eps*s+T0) I]] y.
/// gamma = 1 is the system whose fast part is the drift generator A.
/// `damping = false` removes the 3/(eps*s+T0) term.
OdeTrajectory integrate_scaled_y(const LinearField& field, const Vector& y0, double T0,
                                 double gamma, double sEnd, const StepOptions& opts = {},
                                 bool damping = true);

/// Fast part A = [[0, I], [-Qhs, 0]] in diagonal coordinates Qhs = P diag(q) P'.
struct DriftGenerator {
  Matrix A;
  Matrix P;        ///< orthogonal eigenvectors of Qhs
  Vector q;        ///< eigenvalues of Qhs (ascending)
  Vector lambdas;  ///< frequencies sqrt(q_k)

  Index dim() const { return P.rows(); }
};

DriftGenerator drift_generator(const LinearField& field);
/// Build from an explicit symmetric positive definite Qhs (need not have unit norm).
DriftGenerator drift_generator(const Matrix& qhatS);

/// e^{As} from the closed form  Phat [[C(s), S2(s)], [-S1(s), C(s)]] Phat'
/// with C = diag cos(l_k s), S1 = diag l_k sin(l_k s), S2 = diag sin(l_k s)/l_k.
Matrix exp_drift(const DriftGenerator& gen, double s);

/// psi' = A psi.
OdeTrajectory integrate_drift(const DriftGenerator& gen, const Vector& psi0, double sEnd,
                              const StepOptions& opts = {});

/// Pulled-back slow system dz/ds = eps e^{-As} B(eps s) e^{As} z.
OdeTrajectory integrate_pullback(const LinearField& field, const Vector& z0, double T0,
                                 double sEnd, const StepOptions& opts = {},
                                 bool damping = true);

}  // namespace nagflow
