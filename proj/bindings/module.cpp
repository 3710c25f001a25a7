// Python bindings for the main operations: averaged functions, branch zeros,
// periodic-orbit location, eigenvalue-crossing data, and the closed-form
// comparison suites.  Reports are plain dicts/lists so downstream tooling
// can serialize them directly.
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "zerohopf/averaging.hpp"
#include "zerohopf/cli.hpp"
#include "zerohopf/lyapschmidt.hpp"
#include "zerohopf/oracles.hpp"
#include "zerohopf/stability.hpp"
#include "zerohopf/systems.hpp"
#include "zerohopf/torus.hpp"

namespace py = pybind11;
using namespace zerohopf;
using Eigen::Vector2d;
using Eigen::VectorXd;

namespace {

lyapschmidt::BranchChart amplitude_chart(double lo, double hi) {
  lyapschmidt::BranchChart chart;
  chart.m = 1;
  chart.u_min = VectorXd::Constant(1, std::max(lo, 1e-6));
  chart.u_max = VectorXd::Constant(1, hi);
  return chart;
}

py::list records_to_list(const std::vector<oracles::DiscrepancyRecord>& recs) {
  py::list out;
  for (const auto& r : recs) {
    py::dict d;
    d["name"] = r.name;
    d["printed"] = r.printed;
    d["engine"] = r.engine;
    d["abs_gap"] = r.abs_gap;
    d["rel_gap"] = r.rel_gap;
    d["verdict"] = r.verdict;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(zerohopf, m) {
  m.doc() =
      "Averaging-based bifurcation analysis of the Rossler system: "
      "averaged functions up to order five, branch zeros, periodic orbits, "
      "eigenvalue crossings, and closed-form comparison reports.";

  py::class_<systems::CaseAFamily>(m, "CaseAFamily",
                                   "Rotating unfolding (a, b, c) = "
                                   "(abar + eps*alpha, 1 + eps*beta, "
                                   "abar + eps*gamma).")
      .def(py::init([](double abar, double alpha, double beta, double gamma,
                       double eps) {
             systems::CaseAFamily f;
             f.abar = abar;
             f.alpha = alpha;
             f.beta = beta;
             f.gamma = gamma;
             f.eps = eps;
             f.validate();
             return f;
           }),
           py::arg("abar"), py::arg("alpha"), py::arg("beta"),
           py::arg("gamma"), py::arg("eps"))
      .def_readwrite("abar", &systems::CaseAFamily::abar)
      .def_readwrite("alpha", &systems::CaseAFamily::alpha)
      .def_readwrite("beta", &systems::CaseAFamily::beta)
      .def_readwrite("gamma", &systems::CaseAFamily::gamma)
      .def_readwrite("eps", &systems::CaseAFamily::eps);

  py::class_<systems::CaseBFamily>(m, "CaseBFamily",
                                   "Resonant unfolding (a, b, c) = "
                                   "(alpha(eps), omega^2 - 1 + beta(eps), "
                                   "gamma(eps)) with degree-5 polynomial "
                                   "coefficient curves.")
      .def(py::init([](double omega, std::array<double, 5> alpha,
                       std::array<double, 5> beta, std::array<double, 5> gamma,
                       double eps) {
             systems::CaseBFamily f;
             f.omega = omega;
             f.alpha = alpha;
             f.beta = beta;
             f.gamma = gamma;
             f.eps = eps;
             f.validate();
             return f;
           }),
           py::arg("omega"), py::arg("alpha"), py::arg("beta"),
           py::arg("gamma"), py::arg("eps"))
      .def_readwrite("omega", &systems::CaseBFamily::omega)
      .def_readwrite("alpha", &systems::CaseBFamily::alpha)
      .def_readwrite("beta", &systems::CaseBFamily::beta)
      .def_readwrite("gamma", &systems::CaseBFamily::gamma)
      .def_readwrite("eps", &systems::CaseBFamily::eps);

  py::class_<averaging::AveragedSet>(m, "AveragedSet",
                                     "Averaged functions g_1..g_5 of a "
                                     "standard-form system.")
      .def("g",
           [](const averaging::AveragedSet& av, const VectorXd& z, int order) {
             return av.g(z, order);
           },
           py::arg("z"), py::arg("order"),
           "Evaluate the order-th averaged function at z.");

  m.def(
      "case_a_averaged",
      [](const systems::CaseAFamily& f) {
        return new averaging::AveragedSet(systems::case_a_standard_form(f));
      },
      py::arg("family"), py::return_value_policy::take_ownership);
  m.def(
      "case_b_averaged",
      [](const systems::CaseBFamily& f) {
        return new averaging::AveragedSet(systems::case_b_standard_form(f));
      },
      py::arg("family"), py::return_value_policy::take_ownership);

  m.def(
      "bifurcation_zero",
      [](const averaging::AveragedSet& av, int order, double lo, double hi) {
        auto chart = amplitude_chart(lo, hi);
        auto rep = lyapschmidt::find_simple_zero(av, chart, order, lo, hi);
        lyapschmidt::z_series(av, chart, rep);
        py::dict d;
        d["amplitude"] = rep.u_star(0);
        d["residual"] = rep.residual;
        d["det"] = rep.det_Dfl;
        d["z0"] = Vector2d(rep.z0);
        d["z1"] = Vector2d(rep.z1);
        d["z2"] = Vector2d(rep.z2);
        return d;
      },
      py::arg("averaged"), py::arg("order"), py::arg("lo"), py::arg("hi"),
      "Simple zero of the order-th bifurcation function on the amplitude "
      "window, with the eps-series of the bifurcating branch.");

  m.def(
      "periodic_orbit",
      [](const averaging::AveragedSet& av, const VectorXd& seed, double eps) {
        stability::PoincareMapHandle h{av.system(), 1e-12, 1e-14};
        auto orb = stability::locate_periodic_orbit(h, seed, eps);
        py::dict d;
        d["fixed_point"] = VectorXd(orb.fixed_point);
        d["residual"] = orb.residual;
        std::vector<std::complex<double>> mults;
        bool stable = true;
        for (int i = 0; i < orb.multipliers.size(); ++i) {
          mults.push_back(orb.multipliers(i));
          stable = stable && std::abs(orb.multipliers(i)) < 1.0;
        }
        d["multipliers"] = mults;
        d["asymptotically_stable"] = stable;
        d["liouville_defect"] = orb.liouville_defect;
        return d;
      },
      py::arg("averaged"), py::arg("seed"), py::arg("eps"),
      "Newton-refined fixed point of the period map with its Floquet "
      "multipliers.");

  m.def(
      "case_a_crossing",
      [](const systems::CaseAFamily& base, double lo, double hi) {
        systems::CaseAFamily f0 = base;
        torus::MuFamily fam = [f0](double gamma) {
          systems::CaseAFamily g = f0;
          g.gamma = gamma;
          return averaging::AveragedSet(systems::case_a_standard_form(g));
        };
        Vector2d crit =
            torus::case_a_critical_equilibrium(base.abar, base.beta);
        auto data = torus::find_crossing(fam, lo, hi, crit, "gamma");
        auto ns = torus::jordan_normalize(fam(data.mu0), data.x_mu(data.mu0));
        py::dict d;
        d["gamma0"] = data.mu0;
        d["omega0"] = data.omega0;
        d["transversal_speed"] = data.d;
        d["lyapunov_l1"] = torus::lyapunov_l1(ns);
        return d;
      },
      py::arg("family"), py::arg("lo"), py::arg("hi"),
      "Eigenvalue crossing of the rotating family over a gamma window, with "
      "the first Lyapunov coefficient at the crossing.");

  m.def(
      "compare_case_a",
      [](const systems::CaseAFamily& f, int points) {
        return records_to_list(oracles::compare_case_a(f, points));
      },
      py::arg("family"), py::arg("points") = 20,
      "Closed-form-vs-engine comparison records for the rotating family.");
  m.def(
      "compare_case_b",
      [](const systems::CaseBFamily& f, int points) {
        return records_to_list(oracles::compare_case_b(f, points));
      },
      py::arg("family"), py::arg("points") = 20,
      "Closed-form-vs-engine comparison records for the resonant family.");
  m.def(
      "compare_standard_analysis",
      [](const systems::CaseBFamily& f, int level, int points) {
        return records_to_list(
            oracles::compare_standard_analysis(f, level, points));
      },
      py::arg("family"), py::arg("level"), py::arg("points") = 20,
      "Engine-vs-template comparison under the vanishing pattern.");

  m.def("selftest", [] { return cli::run_selftest(); },
        "Built-in quick checks; returns 0 on success, 2 on failure.");
}
