#include "nagflow/cli/scenario.hpp"

#include "nagflow/averaging.hpp"
#include "nagflow/cli/csv.hpp"
#include "nagflow/errors.hpp"
#include "nagflow/fields.hpp"
#include "nagflow/hybrid.hpp"
#include "nagflow/odesim.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

namespace nagflow::cli {

namespace fs = std::filesystem;

namespace {

class Report {
 public:
  void add(const std::string& key, const std::string& value) { s_ += key + ": " + value + "\n"; }
  void add(const std::string& key, double x) { add(key, format_number(x)); }
  void add(const std::string& key, long long x) { add(key, std::to_string(x)); }
  void add(const std::string& key, std::size_t x) { add(key, std::to_string(x)); }
  void add(const std::string& key, int x) { add(key, std::to_string(x)); }
  void flag(const std::string& key, bool b) { add(key, std::string(b ? "yes" : "no")); }
  void block(const std::string& text) { s_ += text; }
  const std::string& text() const { return s_; }

 private:
  std::string s_;
};

std::string vec_text(const Vector& v) {
  std::string s = "[";
  for (Index i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += format_number(v(i));
  }
  return s + "]";
}

std::string mat_text(const Matrix& m) {
  std::string s = "[";
  for (Index i = 0; i < m.rows(); ++i) {
    if (i) s += ", ";
    s += vec_text(m.row(i).transpose());
  }
  return s + "]";
}

std::string spectrum_text(const std::vector<std::complex<double>>& sp) {
  std::string s = "[";
  for (std::size_t i = 0; i < sp.size(); ++i) {
    if (i) s += ", ";
    s += format_number(sp[i].real());
    if (sp[i].imag() != 0) {
      s += (sp[i].imag() < 0 ? "-" : "+") + format_number(std::abs(sp[i].imag())) + "i";
    }
  }
  return s + "]";
}

std::vector<std::string> indexed(const std::string& prefix, Index n) {
  std::vector<std::string> names;
  for (Index i = 1; i <= n; ++i) names.push_back(prefix + std::to_string(i));
  return names;
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

class Outputs {
 public:
  explicit Outputs(const std::string& dir) : dir_(dir) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw ScenarioError("cannot create output directory '" + dir + "': " + ec.message());
  }

  std::ofstream open(const std::string& name) {
    const fs::path p = dir_ / name;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ScenarioError("cannot write '" + p.string() + "'");
    files_.push_back(p.string());
    return f;
  }

  void write(const std::string& name, const std::string& contents) {
    auto f = open(name);
    f << contents;
  }

  const std::vector<std::string>& files() const { return files_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

StepOptions step_options(const ScenarioConfig& c) {
  StepOptions o;
  o.h = c.step;
  o.blowUpCap = c.blowupCap;
  o.stride = c.stride;
  return o;
}

HybridOptions hybrid_options(const ScenarioConfig& c) {
  HybridOptions o;
  o.h = c.step;
  o.blowUpCap = c.blowupCap;
  o.stride = c.stride;
  return o;
}

GeneralField general_field(const ScenarioConfig& c, const LinearField& lf) {
  return c.fieldKind == "arctan" ? arctan_field(lf, c.weight) : as_general(lf);
}

void require_linear(const ScenarioConfig& c) {
  if (c.fieldKind != "linear") {
    throw ScenarioError("scenario '" + c.scenario + "' needs field.kind = linear");
  }
}

void write_trajectory(Outputs& out, const std::string& name, const std::string& timeName,
                      const std::vector<std::string>& cols, const OdeTrajectory& traj) {
  auto f = out.open(name);
  CsvWriter w(f, concat({timeName}, cols));
  for (std::size_t k = 0; k < traj.size(); ++k) {
    w << traj.times[k];
    for (Index i = 0; i < traj.states[k].size(); ++i) w << traj.states[k](i);
    w.endRow();
  }
}

double sup_abs(const Vector& v) { return v.cwiseAbs().maxCoeff(); }

/// max |y| over the last decile of samples divided by the first-decile max.
double decile_envelope_ratio(const OdeTrajectory& traj, Index components) {
  const std::size_t n = traj.size();
  const std::size_t d = std::max<std::size_t>(1, n / 10);
  double first = 0, last = 0;
  for (std::size_t k = 0; k < d; ++k) first = std::max(first, sup_abs(traj.states[k].head(components)));
  for (std::size_t k = n - d; k < n; ++k) last = std::max(last, sup_abs(traj.states[k].head(components)));
  return first > 0 ? last / first : 0.0;
}

struct HybridRun {
  RestartConfig restart;
  std::string Tsource;
  LyapunovCertificate cert;
  HybridTrajectory traj;
  DecreaseReport decrease;
  EnvelopeReport envelopes;
};

HybridRun run_hybrid(const ScenarioConfig& c, const GeneralField& g, Report& rep) {
  HybridRun h;
  const FieldConstants k = constants_of(g);
  if (c.T) {
    h.restart.T = *c.T;
    h.Tsource = "config";
  } else {
    const OptimalRestart opt = optimal_restart_auto(k, c.eta, c.T0, c.autoIterations);
    h.restart.T = opt.Topt;
    h.Tsource = "optimal-restart";
  }
  h.restart.T0 = c.T0;
  h.restart.eta = c.eta;
  if (!(h.restart.T > h.restart.T0)) throw ScenarioError("resolved T must exceed T0");
  const double tau0 = c.tau0.value_or(c.T0);
  if (tau0 > h.restart.T) throw ScenarioError("initial.tau0 exceeds the resolved T");

  h.cert = c.enforceWindow ? lyapunov_certificate(k, h.restart) : lyapunov_constants(k, h.restart);
  h.traj = simulate_hybrid(g, h.restart, HybridState{c.q0, c.p0, tau0}, c.tEnd, hybrid_options(c));
  h.decrease = verify_decrease(g, h.cert, h.traj);
  h.envelopes = verify_envelopes(g, h.cert, h.traj);

  rep.add("kappa_J", k.kappaJ);
  rep.add("ell_J", k.ellJ);
  rep.add("ell_K", k.ellK);
  rep.add("T", h.restart.T);
  rep.add("T_source", h.Tsource);
  rep.add("tau0", tau0);
  rep.block(to_text(h.cert));
  rep.add("hybrid_samples", h.traj.samples.size());
  rep.add("jumps", h.traj.jumps());
  rep.add("hybrid_step", h.traj.step);
  rep.flag("hybrid_blew_up", h.traj.blewUp);
  const double d0 = (h.traj.samples.front().q - g.xStar).norm();
  const double d1 = (h.traj.samples.back().q - g.xStar).norm();
  rep.add("initial_distance", d0);
  rep.add("final_distance", d1);
  rep.add("decay_orders", d1 > 0 ? std::log10(d0 / d1) : INFINITY);
  rep.block(to_text(h.decrease));
  rep.block(to_text(h.envelopes));
  return h;
}

bool claim_violated(const HybridRun& h, Report& rep) {
  const bool violated =
      h.cert.admissible && (!h.decrease.passed() || !h.envelopes.passed() || h.traj.blewUp);
  rep.flag("certified_claims_hold", !violated);
  if (!h.cert.admissible) rep.add("note", std::string("restart period outside the certified window"));
  return violated;
}

std::string plot_header(const std::string& title) {
  return "# gnuplot script; run from this directory: gnuplot -p plot.gp\n"
         "set datafile separator ','\n"
         "set key autotitle columnhead\n"
         "set grid\n"
         "set title '" + title + "'\n";
}

std::string plot_columns(const std::string& file, int first, int count, const std::string& xcol = "1") {
  std::string s = "plot ";
  for (int i = 0; i < count; ++i) {
    if (i) s += ", \\\n     ";
    s += "'" + file + "' using " + xcol + ":" + std::to_string(first + i) + " with lines";
  }
  return s + "\n";
}

// ---------------------------------------------------------------------------

int decompose(const ScenarioConfig& c, Outputs&, Report& rep) {
  const LinearField lf = helmholtz_split(c.Q);
  rep.add("Q", mat_text(lf.Q()));
  rep.add("Qs", mat_text(lf.Qs()));
  rep.add("Qa", mat_text(lf.Qa()));
  rep.add("kappa_J", lf.kappaJ());
  rep.add("ell_J", lf.ellJ());
  rep.add("ell_K", lf.ellK());
  rep.add("alpha", lf.alpha());
  rep.flag("alpha_in_range", lf.alphaInRange());
  for (const auto& w : lf.warnings()) rep.add("warning", w);
  rep.add("Qs_eigenvalues", vec_text(lf.symmetricEigenvalues()));
  const NormalizedParts np = normalize(lf);
  rep.add("Qhat_s", mat_text(np.qhatS));
  rep.add("Qhat_a", mat_text(np.qhatA));
  rep.add("epsilon", time_scale_epsilon(lf));

  const GeneralField g = general_field(c, lf);
  ValidationOptions vo;
  vo.samples = c.validateSamples;
  vo.radius = c.validateRadius;
  vo.seed = c.seed;
  const ValidationReport v = validate_assumption1(g, vo);
  rep.add("field_kind", c.fieldKind);
  rep.add("validation_samples", v.samples);
  rep.add("equilibrium_residual", v.equilibriumResidual);
  rep.add("monotone_J_worst", v.monotoneJ.worst);
  rep.flag("monotone_J_passed", v.monotoneJ.passed);
  rep.add("monotone_K_worst", v.monotoneK.worst);
  rep.flag("monotone_K_passed", v.monotoneK.passed);
  rep.add("lipschitz_J_worst", v.lipschitzJ.worst);
  rep.flag("lipschitz_J_passed", v.lipschitzJ.passed);
  rep.add("lipschitz_K_worst", v.lipschitzK.worst);
  rep.flag("lipschitz_K_passed", v.lipschitzK.passed);
  rep.flag("assumption_passed", v.passed());
  return kOk;
}

CertificateOptions certificate_options(const ScenarioConfig& c) {
  CertificateOptions o;
  o.degeneracyTol = c.degeneracyTol;
  o.quadratureNodes = c.quadratureNodes;
  return o;
}

int instability_test(const ScenarioConfig& c, Outputs&, Report& rep) {
  require_linear(c);
  const LinearField lf = helmholtz_split(c.Q);
  rep.block(to_text(instability_certificate(lf, certificate_options(c))));
  return kOk;
}

int simulate_ode(const ScenarioConfig& c, Outputs& out, Report& rep) {
  const LinearField lf = helmholtz_split(c.Q);
  const GeneralField g = general_field(c, lf);
  const Index n = c.dim();
  const OdeTrajectory traj = integrate_nesterov_t(g, c.x0, c.v0, c.T0, c.eta, c.tEnd, step_options(c));
  {
    auto f = out.open("ode.csv");
    CsvWriter w(f, concat(concat(concat({"t"}, indexed("x", n)), indexed("v", n)),
                          {"tau", "dist", "J_gap"}));
    for (std::size_t k = 0; k < traj.size(); ++k) {
      const Vector& y = traj.states[k];
      w << traj.times[k];
      for (Index i = 0; i < y.size(); ++i) w << y(i);
      w << (y.head(n) - g.xStar).norm() << g.Jtilde(y.head(n));
      w.endRow();
    }
  }
  out.write("plot.gp", plot_header("Nesterov ODE: |x - x*|") + "set logscale y\nset xlabel 't'\n" +
                           plot_columns("ode.csv", static_cast<int>(2 * n + 3), 1));
  rep.add("samples", traj.size());
  rep.add("step", traj.step);
  rep.flag("blew_up", traj.blewUp);
  rep.add("t_final", traj.times.back());
  rep.add("final_distance", (traj.back().head(n) - g.xStar).norm());
  return kOk;
}

double slow_horizon(const ScenarioConfig& c, const LinearField& lf) {
  return c.sEndSlow.value_or(1.0 / time_scale_epsilon(lf));
}

int simulate_pullback(const ScenarioConfig& c, Outputs& out, Report& rep) {
  require_linear(c);
  const LinearField lf = helmholtz_split(c.Q);
  const double sEnd = slow_horizon(c, lf);
  const OdeTrajectory traj = integrate_pullback(lf, c.z0, c.T0, sEnd, step_options(c));
  write_trajectory(out, "pullback.csv", "s", indexed("z", 2 * c.dim()), traj);
  out.write("plot.gp", plot_header("Pulled-back system z(s)") + "set xlabel 's'\n" +
                           plot_columns("pullback.csv", 2, static_cast<int>(2 * c.dim())));
  rep.add("epsilon", time_scale_epsilon(lf));
  rep.add("s_end", sEnd);
  rep.add("samples", traj.size());
  rep.add("step", traj.step);
  rep.flag("blew_up", traj.blewUp);
  rep.add("final_state", vec_text(traj.back()));
  return kOk;
}

int simulate_average(const ScenarioConfig& c, Outputs& out, Report& rep) {
  require_linear(c);
  const LinearField lf = helmholtz_split(c.Q);
  const double eps = time_scale_epsilon(lf);
  const double sEnd = slow_horizon(c, lf);
  const AveragedSystem avg = average_closed_form(lf, c.degeneracyTol);
  const OdeTrajectory traj = integrate_average(avg, c.zeta0, c.T0, eps, sEnd, step_options(c));
  write_trajectory(out, "average.csv", "s", indexed("zeta", 2 * c.dim()), traj);
  out.write("plot.gp", plot_header("Averaged system zeta(s)") + "set xlabel 's'\n" +
                           plot_columns("average.csv", 2, static_cast<int>(2 * c.dim())));
  rep.add("epsilon", eps);
  rep.add("s_end", sEnd);
  rep.add("B1bar", mat_text(avg.B1bar));
  rep.add("B2bar", mat_text(avg.B2bar));
  rep.add("spectrum_B1bar", spectrum_text(avg.spectrumB1));
  rep.add("max_real_part", avg.maxRealPart);
  rep.add("samples", traj.size());
  rep.flag("blew_up", traj.blewUp);
  rep.add("final_state", vec_text(traj.back()));
  return kOk;
}

int simulate_hybrid_scenario(const ScenarioConfig& c, Outputs& out, Report& rep) {
  const LinearField lf = helmholtz_split(c.Q);
  const GeneralField g = general_field(c, lf);
  const Index n = c.dim();
  const HybridRun h = run_hybrid(c, g, rep);
  {
    auto f = out.open("hybrid.csv");
    auto cols = concat(concat(concat({"t", "j"}, indexed("q", n)), indexed("p", n)), {"tau"});
    if (c.writeLyapunov) cols.push_back("V");
    CsvWriter w(f, cols);
    for (const auto& s : h.traj.samples) {
      w << s.t << static_cast<long long>(s.j);
      for (Index i = 0; i < n; ++i) w << s.q(i);
      for (Index i = 0; i < n; ++i) w << s.p(i);
      w << s.tau;
      if (c.writeLyapunov) w << lyapunov_value(h.cert, g, s);
      w.endRow();
    }
  }
  std::string plot = plot_header("Restarted Nesterov flow") + "set xlabel 't'\nset logscale y\n";
  if (c.writeLyapunov) {
    plot += "plot 'hybrid.csv' using 1:" + std::to_string(2 * n + 4) + " with lines title 'V'\n";
  } else {
    plot += "plot 'hybrid.csv' using 1:(sqrt(";
    for (Index i = 0; i < n; ++i) plot += (i ? "+$" : "$") + std::to_string(3 + i) + "**2";
    plot += ")) with lines title '|q|'\n";
  }
  out.write("plot.gp", plot);
  return claim_violated(h, rep) ? kClaimViolation : kOk;
}

int optimal_restart_scenario(const ScenarioConfig& c, Outputs& out, Report& rep) {
  const LinearField lf = helmholtz_split(c.Q);
  const GeneralField g = general_field(c, lf);
  const FieldConstants k = constants_of(g);
  const OptimalRestart r = c.cUpper ? optimal_restart(k.kappaJ, c.eta, c.T0, *c.cUpper)
                                    : optimal_restart_auto(k, c.eta, c.T0, c.autoIterations);
  rep.add("c_upper_source", std::string(c.cUpper ? "config" : "fixed-point"));
  rep.add("c_upper", r.cUpper);
  rep.add("beta", r.beta);
  rep.add("xi_star", r.xiStar);
  rep.add("T_lower", r.Tlower);
  rep.add("T_opt", r.Topt);
  rep.add("T_opt_over_T_lower", r.Topt / r.Tlower);
  rep.add("iterations", r.iterations);
  if (r.Topt > c.T0) {
    const LyapunovCertificate cert = lyapunov_constants(k, {c.T0, r.Topt, c.eta});
    rep.add("T_upper", cert.Tupper);
    rep.flag("T_opt_admissible", cert.admissible);
    rep.add("rho_at_T_opt", cert.rho);
  }
  {
    auto f = out.open("optimality.csv");
    CsvWriter w(f, {"xi", "theta"});
    const int N = 200;
    for (int i = 1; i < N; ++i) {
      const double xi = static_cast<double>(i) / N;
      w << xi << restart_optimality(r.beta, xi);
      w.endRow();
    }
  }
  out.write("plot.gp", plot_header("Restart optimality function") +
                           "set xlabel 'xi'\nset arrow from " + format_number(r.xiStar) +
                           ", graph 0 to " + format_number(r.xiStar) + ", graph 1 nohead\n" +
                           plot_columns("optimality.csv", 2, 1));
  return kOk;
}

int figure1(const ScenarioConfig& c, Outputs& out, Report& rep) {
  require_linear(c);
  const LinearField lf = helmholtz_split(c.Q);
  const Index m = 2 * c.dim();
  const double eps = time_scale_epsilon(lf);
  const StepOptions opts = step_options(c);

  const DriftGenerator gen = drift_generator(lf);
  const OdeTrajectory psi = integrate_drift(gen, c.psi0, c.sEnd, opts);
  write_trajectory(out, "psi.csv", "s", indexed("psi", m), psi);

  const double sSlow = slow_horizon(c, lf);
  const OdeTrajectory z = integrate_pullback(lf, c.z0, c.T0, sSlow, opts);
  const CertificateReport cert = instability_certificate(lf, certificate_options(c));
  const OdeTrajectory zeta = integrate_average(cert.closedForm, c.zeta0, c.T0, eps, sSlow, opts);
  double maxGap = 0;
  {
    auto f = out.open("slow.csv");
    CsvWriter w(f, concat(concat({"s"}, indexed("z", m)), indexed("zeta", m)));
    const std::size_t rows = std::min(z.size(), zeta.size());
    for (std::size_t k = 0; k < rows; ++k) {
      w << z.times[k];
      for (Index i = 0; i < m; ++i) w << z.states[k](i);
      for (Index i = 0; i < m; ++i) w << zeta.states[k](i);
      w.endRow();
      maxGap = std::max(maxGap, (z.states[k] - zeta.states[k]).norm());
    }
  }

  const OdeTrajectory y = integrate_scaled_y(lf, c.y0, c.T0, 1.0, c.sEnd, opts);
  write_trajectory(out, "y.csv", "s", indexed("y", m), y);

  std::string plot = plot_header("Drift, slow and full systems") +
                     "set multiplot layout 1,3\nset xlabel 's'\nset title 'psi'\n" +
                     plot_columns("psi.csv", 2, static_cast<int>(m)) + "set title 'z and zeta'\n" +
                     plot_columns("slow.csv", 2, static_cast<int>(2 * m)) + "set title 'y'\n" +
                     plot_columns("y.csv", 2, static_cast<int>(m)) + "unset multiplot\n";
  out.write("plot.gp", plot);

  rep.add("epsilon", eps);
  rep.add("verdict", std::string(to_string(cert.verdict)));
  rep.add("max_real_part", cert.maxRealPart);
  rep.add("s_end", c.sEnd);
  rep.add("s_end_slow", sSlow);
  rep.add("max_z_minus_zeta_over_z0", c.z0.norm() > 0 ? maxGap / c.z0.norm() : 0.0);
  rep.add("y_decile_envelope_ratio", decile_envelope_ratio(y, c.dim()));
  rep.flag("y_blew_up", y.blewUp);
  return kOk;
}

int figure2(const ScenarioConfig& c, Outputs& out, Report& rep) {
  const LinearField lf = helmholtz_split(c.Q);
  const GeneralField g = general_field(c, lf);
  const Index n = c.dim();

  const OdeTrajectory plain =
      integrate_nesterov_t(g, c.q0, c.p0, c.T0, c.eta, c.tEndPlain, step_options(c));
  {
    auto f = out.open("plain.csv");
    CsvWriter w(f, concat({"t", "dist"}, indexed("x", n)));
    for (std::size_t k = 0; k < plain.size(); ++k) {
      const Vector x = plain.states[k].head(n);
      w << plain.times[k] << (x - g.xStar).norm();
      for (Index i = 0; i < n; ++i) w << x(i);
      w.endRow();
    }
  }
  rep.add("plain_t_end", plain.times.back());
  rep.flag("plain_blew_up", plain.blewUp);
  rep.add("plain_final_distance", (plain.back().head(n) - g.xStar).norm());

  const HybridRun h = run_hybrid(c, g, rep);
  {
    auto f = out.open("hybrid.csv");
    CsvWriter w(f, {"t", "j", "dist", "jump"});
    std::size_t next = 0;
    for (std::size_t k = 0; k < h.traj.samples.size(); ++k) {
      const auto& s = h.traj.samples[k];
      const bool jump = next < h.traj.jumpIndices.size() && h.traj.jumpIndices[next] == k;
      if (jump) ++next;
      w << s.t << static_cast<long long>(s.j) << (s.q - g.xStar).norm()
        << static_cast<long long>(jump ? 1 : 0);
      w.endRow();
    }
  }
  out.write("plot.gp", plot_header("Plain versus restarted: |q - x*|") +
                           "set logscale y\nset xlabel 't'\n"
                           "plot 'plain.csv' using 1:2 with lines title 'plain', \\\n"
                           "     'hybrid.csv' using 1:3 with lines title 'restarted', \\\n"
                           "     'hybrid.csv' using 1:($4 > 0 ? $3 : 1/0) with points pt 7 title 'jumps'\n");
  return claim_violated(h, rep) ? kClaimViolation : kOk;
}

using Handler = std::function<int(const ScenarioConfig&, Outputs&, Report&)>;

Handler handler_for(const std::string& name) {
  if (name == "decompose") return decompose;
  if (name == "instability-test") return instability_test;
  if (name == "simulate-ode") return simulate_ode;
  if (name == "simulate-pullback") return simulate_pullback;
  if (name == "simulate-average") return simulate_average;
  if (name == "simulate-hybrid") return simulate_hybrid_scenario;
  if (name == "optimal-restart") return optimal_restart_scenario;
  if (name == "figure1") return figure1;
  if (name == "figure2") return figure2;
  throw ScenarioError("unknown scenario '" + name + "'");
}

}  // namespace

RunResult run(const ScenarioConfig& cfg) {
  const Handler handler = handler_for(cfg.scenario);
  Outputs out(cfg.out);
  Report rep;
  rep.add("scenario", cfg.scenario);
  int code = kOk;
  try {
    code = handler(cfg, out, rep);
  } catch (const ScenarioError&) {
    throw;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ScenarioError(e.what());
  }
  rep.add("exit_code", code);
  rep.block(resolved_report_lines(cfg));
  out.write("report.txt", rep.text());
  out.write("config.resolved", resolved_text(cfg));

  RunResult result;
  result.exitCode = code;
  result.files = out.files();
  result.report = rep.text();
  return result;
}

int run_text(const std::string& text, const std::vector<std::string>& overrides, std::ostream& err,
             RunResult* result) {
  ScenarioConfig cfg;
  try {
    cfg = parse_config(text, overrides);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  try {
    RunResult r = run(cfg);
    if (r.exitCode == kClaimViolation) {
      err << "certified claim violated; see " << cfg.out << "/report.txt\n";
    }
    const int code = r.exitCode;
    if (result) *result = std::move(r);
    return code;
  } catch (const ScenarioError& e) {
    err << "scenario error: " << e.what() << '\n';
    return kScenarioError;
  }
}

}  // namespace nagflow::cli
