#include <algorithm>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tfd/calibrate.hpp"
#include "tfd/errors.hpp"
#include "tfd/model.hpp"
#include "tfd/optctl.hpp"
#include "tfd/sensitivity.hpp"
#include "tfd/solver.hpp"
#include "tfd/specfun.hpp"

namespace py = pybind11;
using namespace tfd;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
    const std::vector<py::ssize_t> shape{static_cast<py::ssize_t>(v.size())};
    const std::vector<py::ssize_t> strides{static_cast<py::ssize_t>(sizeof(double))};
    py::array_t<double> a(shape, strides);
    std::copy(v.begin(), v.end(), a.mutable_data());
    return a;
}

py::dict trajectory_dict(const Trajectory& tr) {
    const std::size_t n = tr.states.size();
    std::vector<double> t(n), SH(n), IH(n), RH(n), SV(n), IV(n);
    for (std::size_t i = 0; i < n; ++i) {
        const StateVector& s = tr.states[i];
        t[i] = tr.grid.t(static_cast<int>(i));
        SH[i] = s.S_H;
        IH[i] = s.I_H;
        RH[i] = s.R_H;
        SV[i] = s.S_V;
        IV[i] = s.I_V;
    }
    py::dict d;
    d["t"] = to_array(t);
    d["S_H"] = to_array(SH);
    d["I_H"] = to_array(IH);
    d["R_H"] = to_array(RH);
    d["S_V"] = to_array(SV);
    d["I_V"] = to_array(IV);
    d["flux"] = to_array(tr.flux);
    d["weekly_incidence"] = to_array(incidence_series(tr));
    d["cumulative_cases"] = cumulative_cases(tr);
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Tempered fractional-order dengue model: simulation, control, calibration and sensitivity";

    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    py::class_<ModelParams>(m, "ModelParams")
        .def(py::init<>())
        .def_readwrite("N_H", &ModelParams::N_H)
        .def_readwrite("mu_H", &ModelParams::mu_H)
        .def_readwrite("alpha", &ModelParams::alpha)
        .def_readwrite("beta", &ModelParams::beta)
        .def_readwrite("p", &ModelParams::p)
        .def_readwrite("b", &ModelParams::b)
        .def_readwrite("beta_VH", &ModelParams::beta_VH)
        .def_readwrite("beta_HV", &ModelParams::beta_HV)
        .def_readwrite("mu_V", &ModelParams::mu_V)
        .def_readwrite("C", &ModelParams::C)
        .def_readwrite("delta", &ModelParams::delta)
        .def_property_readonly("Pi_V", &ModelParams::Pi_V)
        .def("validate", &ModelParams::validate);

    py::class_<StateVector>(m, "StateVector")
        .def(py::init<>())
        .def(py::init([](double SH, double IH, double RH, double SV, double IV) {
                 return StateVector{SH, IH, RH, SV, IV};
             }),
             py::arg("S_H"), py::arg("I_H"), py::arg("R_H"), py::arg("S_V"), py::arg("I_V"))
        .def_readwrite("S_H", &StateVector::S_H)
        .def_readwrite("I_H", &StateVector::I_H)
        .def_readwrite("R_H", &StateVector::R_H)
        .def_readwrite("S_V", &StateVector::S_V)
        .def_readwrite("I_V", &StateVector::I_V);

    m.def("fitted_params", &fitted_params);
    m.def("control_initial_state", &control_initial_state, py::arg("params"));
    m.def("r0", &r0, py::arg("params"));
    m.def("endemic_equilibrium", [](const ModelParams& p) -> py::object {
        const auto e = endemic_equilibrium(p);
        if (!e) return py::none();
        py::dict d;
        d["S_H"] = e->state[0];
        d["I_H"] = e->state[1];
        d["I_V"] = e->state[2];
        d["residual"] = e->residual;
        d["stable"] = e->routh ? e->routh->stable : false;
        return d;
    }, py::arg("params"));

    m.def("lower_incomplete_gamma", [](double t, double y) { return lower_incomplete_gamma(t, y); });
    m.def("mittag_leffler", [](double r, double l, double z) { return mittag_leffler(r, l, z); });

    m.def(
        "simulate",
        [](const ModelParams& p, const StateVector& init, double h, double t_max, double theta) {
            Trajectory tr;
            {
                py::gil_scoped_release nogil;
                tr = simulate(p, init, make_grid(h, t_max, theta));
            }
            return trajectory_dict(tr);
        },
        py::arg("params"), py::arg("init"), py::arg("h") = 0.2, py::arg("t_max") = 364.0, py::arg("theta") = 0.0);

    py::class_<StrategyReport>(m, "StrategyReport")
        .def_readonly("name", &StrategyReport::name)
        .def_readonly("mean_psi", &StrategyReport::mean_psi)
        .def_readonly("mean_zeta", &StrategyReport::mean_zeta)
        .def_readonly("mean_kappa", &StrategyReport::mean_kappa)
        .def_readonly("total_cases", &StrategyReport::total_cases)
        .def_readonly("cost", &StrategyReport::cost)
        .def_readonly("converged", &StrategyReport::converged)
        .def_readonly("sweeps", &StrategyReport::sweeps)
        .def_readonly("residual", &StrategyReport::residual);

    m.def(
        "run_strategy",
        [](const std::string& name, const ModelParams& p, const StateVector& init, double h, double t_max) {
            py::gil_scoped_release nogil;
            return run_strategy(name, p, init, make_grid(h, t_max), CostWeights{});
        },
        py::arg("name"), py::arg("params"), py::arg("init"), py::arg("h") = 0.2, py::arg("t_max") = 364.0);
    m.def("strategy_names", &strategy_names);

    m.def("free_parameter_names", [] { return std::vector<std::string>(kFreeNames.begin(), kFreeNames.end()); });
    m.def("pack", &pack, py::arg("params"), py::arg("init"));
    m.def(
        "synthetic_data",
        [](const ParamVector& th, int n_weeks, double noise_sd, std::uint64_t seed, double h) {
            FitSetup setup;
            setup.h = h;
            return to_array(synthetic_data(th, setup, n_weeks, noise_sd, seed).cases);
        },
        py::arg("theta"), py::arg("n_weeks"), py::arg("noise_sd"), py::arg("seed"), py::arg("h") = 0.5);
    m.def(
        "sse",
        [](const ParamVector& th, const std::vector<double>& cases, double h) {
            FitSetup setup;
            setup.h = h;
            ObservedSeries s;
            for (std::size_t j = 0; j < cases.size(); ++j) {
                s.week.push_back(static_cast<int>(j) + 1);
                s.cases.push_back(cases[j]);
            }
            return sse(th, s, setup);
        },
        py::arg("theta"), py::arg("cases"), py::arg("h") = 0.5);

    m.def(
        "prcc",
        [](const std::vector<std::vector<double>>& X, const std::vector<double>& y) {
            std::vector<double> r;
            for (const auto& c : prcc(X, y)) r.push_back(c.prcc);
            return r;
        },
        py::arg("rows"), py::arg("y"));
    m.def(
        "run_gsa",
        [](int n, std::uint64_t seed, bool total_cases, double h, double t_max) {
            GsaConfig cfg;
            cfg.n = n;
            cfg.seed = seed;
            cfg.total_cases = total_cases;
            cfg.h = h;
            cfg.t_max = t_max;
            const ModelParams base;
            PrccReport rep;
            {
                py::gil_scoped_release nogil;
                rep = run_gsa(GsaBounds::defaults(), base, control_initial_state(base), cfg);
            }
            py::list out;
            for (const auto& e : rep.entries) {
                py::dict d;
                d["parameter"] = e.parameter;
                d["response"] = e.response;
                d["prcc"] = e.prcc;
                d["p_value"] = e.p_value;
                out.append(d);
            }
            return out;
        },
        py::arg("n") = 1000, py::arg("seed") = 1, py::arg("total_cases") = false, py::arg("h") = 0.2,
        py::arg("t_max") = 388.0);
}
