#include <pybind11/pybind11.h>
#include <pybind11/complex.h>
#include <pybind11/stl.h>

#include "sfe/abm.hpp"
#include "sfe/dynamics.hpp"
#include "sfe/errors.hpp"
#include "sfe/fieldcore.hpp"
#include "sfe/scenario.hpp"
#include "sfe/specfun.hpp"
#include "sfe/stability.hpp"

namespace py = pybind11;
using namespace sfe;

PYBIND11_MODULE(_sfe, m) {
    m.doc() = "collective capital field solver";

    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<DomainError>(m, "DomainError", base.ptr());
    py::register_exception<PoleError>(m, "PoleError", base.ptr());
    py::register_exception<SingularError>(m, "SingularError", base.ptr());
    py::register_exception<RegimeError>(m, "RegimeError", base.ptr());
    py::register_exception<NoSolutionError>(m, "NoSolutionError", base.ptr());
    py::register_exception<NonConvergenceError>(m, "NonConvergenceError", base.ptr());

    m.def("gamma", &sfe::gamma);
    m.def("digamma", &sfe::digamma);
    m.def("lambert_w", &lambert_w, py::arg("branch"), py::arg("x"));
    m.def("pcf_d", &pcf_d, py::arg("p"), py::arg("z"));
    m.def("pcf_moments", [](double p) {
        PcfMoment r = pcf_moments(p);
        return py::make_tuple(r.zeroth, r.first);
    });
    m.def("solve_power_exp", &solve_power_exp, py::arg("d"), py::arg("a"), py::arg("c"));

    py::class_<Scenario>(m, "Scenario")
        .def_property_readonly("n_sectors", &Scenario::size)
        .def_property_readonly("centers",
                               [](const Scenario& s) {
                                   std::vector<double> c(s.size());
                                   for (int i = 0; i < s.size(); ++i) c[i] = s.grid.center(i);
                                   return c;
                               })
        .def_property_readonly("r_values", [](const Scenario& s) { return s.landscape.r_values; })
        .def("get", [](const Scenario& s, const std::string& name) {
            double v;
            if (!get_param(s, name, &v)) throw py::key_error(name);
            return v;
        })
        .def("set", [](Scenario& s, const std::string& name, double v) {
            if (!set_param(s, name, v)) throw py::key_error(name);
        })
        .def("validate", [](const Scenario& s) { validate(s); })
        .def("serialize", &serialize_scenario);

    m.def("load_scenario", &load_scenario, py::arg("path"));
    m.def("parse_scenario", &parse_scenario, py::arg("text"));
    m.def("param_names", &param_names);

    py::class_<FieldSolution>(m, "FieldSolution")
        .def_readonly("k_x", &FieldSolution::k_x)
        .def_readonly("psi2", &FieldSolution::psi2)
        .def_readonly("nhat", &FieldSolution::nhat)
        .def_readonly("f", &FieldSolution::f_x)
        .def_readonly("g", &FieldSolution::g_x)
        .def_readonly("p", &FieldSolution::p_x)
        .def_property_readonly("deserted",
                               [](const FieldSolution& s) { return std::vector<bool>(s.deserted.begin(), s.deserted.end()); })
        .def_readonly("lagrange_d", &FieldSolution::lagrange_d)
        .def_readonly("big_m", &FieldSolution::big_m)
        .def_readonly("c_norm", &FieldSolution::c_norm)
        .def_readonly("residual", &FieldSolution::residual)
        .def_readonly("iterations", &FieldSolution::iterations)
        .def("to_csv", [](const FieldSolution& sol, const Scenario& s) { return solution_csv(s, sol); });

    m.def(
        "solve",
        [](const Scenario& s, int max_iter) {
            SolveOptions opt;
            opt.max_iter = max_iter;
            return solve_collective_state(s, opt);
        },
        py::arg("scenario"), py::arg("max_iter") = 20000);

    m.def(
        "classify",
        [](const Scenario& s, const FieldSolution& sol) {
            StabilityReport r = classify(s, sol);
            std::vector<std::string> pat;
            for (Pattern p : r.pattern) pat.emplace_back(to_string(p));
            py::dict d;
            d["stab_denom"] = r.stab_denom;
            d["b_crit"] = r.b_crit;
            d["pattern"] = pat;
            return d;
        },
        py::arg("scenario"), py::arg("solution"));

    m.def(
        "iterate_map_check",
        [](const Scenario& s, const FieldSolution& sol, int i, double dk) {
            return std::string(to_string(iterate_map_check(s, sol, i, dk)));
        },
        py::arg("scenario"), py::arg("solution"), py::arg("sector"), py::arg("perturbation"));

    m.def(
        "dynamics",
        [](const Scenario& s, const FieldSolution& sol, const std::vector<double>& g) {
            DynamicsReport r = regime_analysis(s, sol, s.expectations, g);
            std::vector<std::string> reg;
            for (Regime x : r.regime) reg.emplace_back(to_string(x));
            std::vector<std::vector<bool>> damped;
            for (const auto& row : r.damped) damped.emplace_back(row.begin(), row.end());
            py::dict d;
            d["omega"] = r.omega;
            d["damped"] = damped;
            d["regime"] = reg;
            d["max_residual"] = r.max_residual;
            return d;
        },
        py::arg("scenario"), py::arg("solution"), py::arg("g_wave"));

    m.def(
        "abm_compare",
        [](const Scenario& s, const FieldSolution& sol, long steps, long burn_in, int seeds, double dt,
           int threads) {
            AbmOptions opt;
            opt.dt = dt;
            opt.threads = threads;
            AbmComparison c;
            {
                py::gil_scoped_release release;
                c = run_and_compare(s, sol, steps, burn_in, seeds, opt);
            }
            py::dict d;
            d["mean_k"] = c.mean_k;
            d["se_k"] = c.se_k;
            d["field_k"] = c.field_k;
            d["mean_count"] = c.mean_count;
            d["se_count"] = c.se_count;
            d["field_count"] = c.field_count;
            d["max_conservation_error"] = c.max_conservation_error;
            return d;
        },
        py::arg("scenario"), py::arg("solution"), py::arg("steps"), py::arg("burn_in"), py::arg("seeds"),
        py::arg("dt") = 0.002, py::arg("threads") = 1);
}
