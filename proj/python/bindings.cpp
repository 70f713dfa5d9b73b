#include "nagflow/averaging.hpp"
#include "nagflow/cli/scenario.hpp"
#include "nagflow/errors.hpp"
#include "nagflow/fields.hpp"
#include "nagflow/hybrid.hpp"
#include "nagflow/odesim.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace nagflow;

namespace {

py::dict certificate_dict(const LyapunovCertificate& c) {
  py::dict d;
  d["a"] = c.a;
  d["b"] = c.b;
  d["c"] = c.c;
  d["delta"] = c.delta;
  d["m"] = c.m;
  d["c_lower"] = c.cLower;
  d["c_upper"] = c.cUpper;
  d["lambda"] = c.lambda;
  d["mu"] = c.mu;
  d["Gamma"] = c.Gamma;
  d["nu1"] = c.nu1;
  d["nu2"] = c.nu2;
  d["nu"] = c.nu;
  d["rho"] = c.rho;
  d["T_lower"] = c.Tlower;
  d["T_upper"] = c.Tupper;
  d["admissible"] = c.admissible;
  return d;
}

py::dict restart_dict(const OptimalRestart& r) {
  py::dict d;
  d["beta"] = r.beta;
  d["xi_star"] = r.xiStar;
  d["T_lower"] = r.Tlower;
  d["T_opt"] = r.Topt;
  d["c_upper"] = r.cUpper;
  d["iterations"] = r.iterations;
  return d;
}

py::dict averaged_dict(const AveragedSystem& a) {
  py::dict d;
  d["B1bar"] = a.B1bar;
  d["B2bar"] = a.B2bar;
  d["spectrum"] = a.spectrumB1;
  d["max_real_part"] = a.maxRealPart;
  if (a.period) d["period"] = a.period->period;
  return d;
}

FieldConstants constants_from(const LinearField* field, py::object kappa, py::object ellJ,
                              py::object ellK) {
  if (field) return constants_of(*field);
  return {kappa.cast<double>(), ellJ.cast<double>(), ellK.cast<double>()};
}

}  // namespace

PYBIND11_MODULE(_nagflow, m) {
  m.doc() = "nagflow C++ core";

  static py::exception<Error> base(m, "NagflowError", PyExc_RuntimeError);
  py::register_exception<NotPositiveDefinite>(m, "NotPositiveDefinite", base.ptr());
  py::register_exception<NotCommensurate>(m, "NotCommensurate", base.ptr());
  py::register_exception<WindowViolation>(m, "WindowViolation", base.ptr());
  py::register_exception<BetaOutOfRange>(m, "BetaOutOfRange", base.ptr());

  py::class_<LinearField>(m, "LinearField")
      .def_property_readonly("Q", &LinearField::Q)
      .def_property_readonly("Qs", &LinearField::Qs)
      .def_property_readonly("Qa", &LinearField::Qa)
      .def_property_readonly("ell_J", &LinearField::ellJ)
      .def_property_readonly("ell_K", &LinearField::ellK)
      .def_property_readonly("kappa_J", &LinearField::kappaJ)
      .def_property_readonly("alpha", &LinearField::alpha)
      .def_property_readonly("warnings", &LinearField::warnings)
      .def_property_readonly("epsilon", [](const LinearField& f) { return time_scale_epsilon(f); });

  m.def("helmholtz_split", &helmholtz_split, py::arg("Q"));

  m.def(
      "exp_drift",
      [](const LinearField& f, double s) { return exp_drift(drift_generator(f), s); },
      py::arg("field"), py::arg("s"));

  m.def(
      "period",
      [](const LinearField& f) {
        const PeriodResult p = period(drift_generator(f));
        py::dict d;
        d["period"] = p.period;
        d["omega0"] = p.omega0;
        d["ratios"] = p.ratios;
        d["L"] = p.L;
        return d;
      },
      py::arg("field"));

  m.def(
      "average_closed_form",
      [](const LinearField& f, double tol) { return averaged_dict(average_closed_form(f, tol)); },
      py::arg("field"), py::arg("degeneracy_tol") = 1e-9);
  m.def(
      "average_quadrature",
      [](const LinearField& f, int nodes) { return averaged_dict(average_quadrature(f, nodes)); },
      py::arg("field"), py::arg("nodes") = 4096);

  m.def(
      "instability_certificate",
      [](const LinearField& f) {
        const CertificateReport r = instability_certificate(f);
        py::dict d;
        d["verdict"] = std::string(to_string(r.verdict));
        d["max_real_part"] = r.maxRealPart;
        d["quadrature_discrepancy"] = r.quadratureDiscrepancy;
        d["conditions_hold"] = r.conditions.all();
        d["failures"] = r.conditions.failures;
        d["text"] = to_text(r);
        return d;
      },
      py::arg("field"));

  m.def(
      "integrate_nesterov",
      [](const LinearField& f, const Vector& x0, const Vector& v0, double T0, double eta,
         double tEnd, double h) {
        StepOptions o;
        o.h = h;
        const OdeTrajectory tr = integrate_nesterov_t(f, x0, v0, T0, eta, tEnd, o);
        Matrix states(static_cast<Index>(tr.size()), x0.size() * 2 + 1);
        for (std::size_t k = 0; k < tr.size(); ++k) states.row(static_cast<Index>(k)) = tr.states[k].transpose();
        py::dict d;
        d["t"] = tr.times;
        d["states"] = states;
        d["blew_up"] = tr.blewUp;
        return d;
      },
      py::arg("field"), py::arg("x0"), py::arg("v0"), py::arg("T0"), py::arg("eta"),
      py::arg("t_end"), py::arg("h") = 1e-3);

  m.def(
      "lyapunov_constants",
      [](double kappa, double ellJ, double ellK, double T0, double T, double eta, bool enforce) {
        const FieldConstants k{kappa, ellJ, ellK};
        const RestartConfig cfg{T0, T, eta};
        return certificate_dict(enforce ? lyapunov_certificate(k, cfg) : lyapunov_constants(k, cfg));
      },
      py::arg("kappa_J"), py::arg("ell_J"), py::arg("ell_K"), py::arg("T0"), py::arg("T"),
      py::arg("eta"), py::arg("enforce_window") = false);

  m.def("optimal_restart",
        [](double kappa, double eta, double T0, double cUpper) {
          return restart_dict(optimal_restart(kappa, eta, T0, cUpper));
        },
        py::arg("kappa_J"), py::arg("eta"), py::arg("T0"), py::arg("c_upper"));
  m.def(
      "optimal_restart_auto",
      [](const LinearField* f, py::object kappa, py::object ellJ, py::object ellK, double eta,
         double T0, int iterations) {
        return restart_dict(
            optimal_restart_auto(constants_from(f, kappa, ellJ, ellK), eta, T0, iterations));
      },
      py::arg("field") = nullptr, py::arg("kappa_J") = py::none(), py::arg("ell_J") = py::none(),
      py::arg("ell_K") = py::none(), py::arg("eta") = 0.5, py::arg("T0") = 0.1,
      py::arg("iterations") = 1);

  m.def(
      "simulate_hybrid",
      [](const LinearField& f, const Vector& q0, const Vector& p0, double tau0, double T0,
         double T, double eta, double tEnd, double h) {
        const RestartConfig cfg{T0, T, eta};
        HybridOptions o;
        o.h = h;
        const HybridTrajectory tr = simulate_hybrid(f, cfg, HybridState{q0, p0, tau0}, tEnd, o);
        const GeneralField g = as_general(f);
        const LyapunovCertificate cert = lyapunov_constants(constants_of(f), cfg);
        const DecreaseReport dec = verify_decrease(g, cert, tr);
        const EnvelopeReport env = verify_envelopes(g, cert, tr);
        const Index n = q0.size();
        Matrix q(static_cast<Index>(tr.samples.size()), n);
        std::vector<double> t, tau, V;
        std::vector<int> j;
        for (std::size_t k = 0; k < tr.samples.size(); ++k) {
          const auto& s = tr.samples[k];
          q.row(static_cast<Index>(k)) = s.q.transpose();
          t.push_back(s.t);
          j.push_back(s.j);
          tau.push_back(s.tau);
          V.push_back(lyapunov_value(cert, g, s));
        }
        py::dict d;
        d["t"] = t;
        d["j"] = j;
        d["q"] = q;
        d["tau"] = tau;
        d["V"] = V;
        d["jumps"] = tr.jumps();
        d["blew_up"] = tr.blewUp;
        d["decrease_passed"] = dec.passed();
        d["envelopes_passed"] = env.passed();
        d["certificate"] = certificate_dict(cert);
        return d;
      },
      py::arg("field"), py::arg("q0"), py::arg("p0"), py::arg("tau0"), py::arg("T0"),
      py::arg("T"), py::arg("eta"), py::arg("t_end"), py::arg("h") = 1e-3);

  m.def(
      "run_config",
      [](const std::string& text, const std::vector<std::string>& overrides) {
        std::ostringstream err;
        cli::RunResult r;
        const int code = cli::run_text(text, overrides, err, &r);
        py::dict d;
        d["exit_code"] = code;
        d["files"] = r.files;
        d["report"] = r.report;
        d["stderr"] = err.str();
        return d;
      },
      py::arg("text"), py::arg("overrides") = std::vector<std::string>{});
}
