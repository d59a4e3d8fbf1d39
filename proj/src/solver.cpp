#include "tfd/solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>

#include <boost/numeric/odeint.hpp>

#include "tfd/errors.hpp"

namespace tfd {

ControlSchedule ControlSchedule::zeros(int n_nodes, double c_m) {
    ControlSchedule s;
    s.psi.assign(n_nodes, 0.0);
    s.zeta.assign(n_nodes, 0.0);
    s.kappa.assign(n_nodes, 0.0);
    s.c_m = c_m;
    return s;
}

void ControlSchedule::validate(int n_nodes) const {
    if (size() != n_nodes || static_cast<int>(zeta.size()) != n_nodes || static_cast<int>(kappa.size()) != n_nodes)
        throw DomainError("control schedule length does not match grid nodes (" + std::to_string(n_nodes) + ")");
    auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    for (int i = 0; i < n_nodes; ++i)
        if (!in01(psi[i]) || !in01(zeta[i]) || !in01(kappa[i]))
            throw DomainError("control values must lie in [0,1]");
    if (!(c_m >= 0.0)) throw DomainError("c_m must be non-negative");
}

void ControlSchedule::clamp() {
    for (auto* v : {&psi, &zeta, &kappa})
        for (double& x : *v) x = std::clamp(x, 0.0, 1.0);
}

TemperedOperators::TemperedOperators(const ModelParams& prm, const GridSpec& grid) {
    prm.validate();
    x_ = std::make_shared<const WeightTable>(TemperedOrder{prm.alpha, prm.mu_V}, grid);
    y_ = std::make_shared<const WeightTable>(TemperedOrder{prm.beta, prm.mu_H}, grid);
    z_ = (prm.p == prm.beta) ? y_ : std::make_shared<const WeightTable>(TemperedOrder{prm.p, prm.mu_H}, grid);
}

StepCoefficients step_coefficients(int i, const StateVector& prev, const Histories& hist, const ModelParams& prm,
                                   const TemperedOperators& ops, const ControlSchedule* ctl) {
    if (i < 0 || i >= ops.grid().n_steps) throw DomainError("step index outside grid");
    if (static_cast<int>(hist.I_H.size()) < i + 1 || static_cast<int>(hist.I_V.size()) < i + 1)
        throw DomainError("history shorter than step index");
    const double h = ops.grid().h;
    const double psi = ctl ? ctl->psi[i] : 0.0;
    const double zeta = ctl ? ctl->zeta[i] : 0.0;
    const double kappa = ctl ? ctl->kappa[i] : 0.0;
    const double c_m = ctl ? ctl->c_m : 0.0;

    StepCoefficients k;
    k.ex_X = ops.X().explicit_sum(hist.I_V.data(), i);
    k.g0_X = ops.X().implicit_coef();
    k.ex_Y = ops.Y().explicit_sum(hist.I_H.data(), i);
    k.g0_Y = ops.Y().implicit_coef();
    if (ops.shared_human()) {
        k.ex_Z = k.ex_Y;
        k.g0_Z = k.g0_Y;
    } else {
        k.ex_Z = ops.Z().explicit_sum(hist.I_H.data(), i);
        k.g0_Z = ops.Z().implicit_coef();
    }

    const double N = prm.N_H;
    const double tX = (1.0 - psi) * std::pow(prm.b, prm.alpha) * prm.beta_VH / N;
    const double tZ = (1.0 - psi) * std::pow(prm.b, prm.p) * prm.beta_HV / (N * std::pow(prm.C, prm.p));
    const double rY = 1.0 / std::pow(prm.C, prm.beta);
    const double m = prm.mu_V + c_m * kappa;
    const double hm = 1.0 + h * prm.mu_H;

    k.tX = tX;
    k.tZ = tZ;
    k.A_SH = hm + tX * k.ex_X;
    k.B_SH = tX * k.g0_X;
    k.C_SH = -prev.S_H - h * prm.mu_H * N;
    k.A_IH = hm - k.A_SH;
    k.B_IH = hm + rY * k.g0_Y;
    k.C_IH = -k.B_SH;
    k.D_IH = -prev.I_H + rY * k.ex_Y;
    k.A_RH = hm;
    k.B_RH = hm - k.B_IH;
    k.C_RH = -prev.R_H - prev.I_H - k.D_IH;
    k.A_SV = 1.0 + h * m + tZ * k.ex_Z;
    k.B_SV = tZ * k.g0_Z;
    k.C_SV = -prev.S_V - h * prm.Pi_V() * (1.0 - zeta);
    k.A_IV = 1.0 + h * m - k.A_SV;
    k.B_IV = -k.B_SV;
    k.C_IV = 1.0 + h * m;
    k.D_IV = -prev.I_V;
    return k;
}

namespace {

struct Elim {
    double g, dg, S_H, S_V, I_V, X, Z, scale;
    bool valid;
};

// S_V, I_V and S_H as functions of x = I_H^{i+1}; g is the I_H equation. Without flooring this is the
// step coefficient system rearranged around the operator values xi_X, xi_Z.
Elim eliminate(const StepCoefficients& k, double x, bool floor) {
    Elim e{};
    const double zi = k.ex_Z + k.g0_Z * x;
    const bool zcut = floor && zi < 0.0;
    const double zf = zcut ? 0.0 : zi, dzf = zcut ? 0.0 : k.g0_Z;
    const double dv = k.C_IV + k.tZ * zf;
    if (!(dv > 0.0)) return e;
    e.S_V = -k.C_SV / dv;
    const double dSV = k.C_SV * k.tZ * dzf / (dv * dv);
    e.I_V = (-k.D_IV + k.tZ * e.S_V * zf) / k.C_IV;
    const double dIV = k.tZ * (dSV * zf + e.S_V * dzf) / k.C_IV;
    const double xi = k.ex_X + k.g0_X * e.I_V;
    const bool xcut = floor && xi < 0.0;
    const double xf = xcut ? 0.0 : xi, dxf = xcut ? 0.0 : k.g0_X * dIV;
    const double dh = k.A_RH + k.tX * xf;
    if (!(dh > 0.0)) return e;
    e.S_H = -k.C_SH / dh;
    const double dSH = k.C_SH * k.tX * dxf / (dh * dh);
    const double inf = k.tX * e.S_H * xf;
    e.g = k.B_IH * x + k.D_IH - inf;
    e.dg = k.B_IH - k.tX * (dSH * xf + e.S_H * dxf);
    e.X = xf;
    e.Z = zf;
    e.scale = std::max({1.0, std::fabs(k.B_IH * x), std::fabs(k.D_IH), std::fabs(inf)});
    e.valid = std::isfinite(e.g) && std::isfinite(e.dg);
    return e;
}

double clip_or_throw(double v, double floor_tol, const char* name, int* clips) {
    if (v >= 0.0) return v;
    if (v >= -floor_tol) {
        if (clips) ++*clips;
        return 0.0;
    }
    throw NumericalError(std::string("negative ") + name + " after step: " + std::to_string(v));
}

}  // namespace

StateVector solve_step(const StepCoefficients& k, const StateVector& prev, const ModelParams& prm,
                       const StepSolveConfig& cfg, int* clips) {
    const double neg_tol = 1e-12 * prm.N_H;
    const bool fl = cfg.floor_negative_force;
    double lo = 0.0, hi;
    Elim e0 = eliminate(k, 0.0, fl);
    if (!e0.valid) throw NumericalError("step equations undefined at I_H = 0");
    double x;
    Elim ex = e0;

    auto converged = [&](const Elim& e) { return std::fabs(e.g) <= cfg.tol * e.scale; };

    if (converged(e0) || e0.g > 0.0) {
        // Root at or just below zero.
        if (!converged(e0)) {
            const Elim en = eliminate(k, -neg_tol, fl);
            if (!en.valid || en.g > 0.0)
                throw NumericalError("I_H step has no non-negative root (g(0) = " + std::to_string(e0.g) +
                                     ", scale " + std::to_string(e0.scale) + ")");
            if (clips) ++*clips;
        }
        x = 0.0;
    } else {
        hi = std::max({2.0 * prev.I_H, 1.0});
        Elim eh = eliminate(k, hi, fl);
        while (!(eh.valid && eh.g >= 0.0)) {
            hi *= 2.0;
            if (hi > 1e3 * prm.N_H) throw NumericalError("failed to bracket the I_H step root");
            eh = eliminate(k, hi, fl);
        }
        x = std::clamp(prev.I_H, lo, hi);
        if (x == lo || x == hi) x = 0.5 * (lo + hi);
        ex = eliminate(k, x, fl);
        int it = 0;
        for (; it < cfg.max_iter; ++it) {
            if (!ex.valid) throw NumericalError("step equations undefined inside bracket");
            if (converged(ex)) break;
            if (ex.g < 0.0)
                lo = x;
            else
                hi = x;
            double xn = (ex.dg > 0.0) ? x - cfg.damping * ex.g / ex.dg : lo - 1.0;
            if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
            if (xn == x || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, hi)) {
                x = xn;
                ex = eliminate(k, x, fl);
                break;
            }
            x = xn;
            ex = eliminate(k, x, fl);
        }
        if (it == cfg.max_iter && !converged(ex))
            throw ConvergenceError("step solver exceeded " + std::to_string(cfg.max_iter) + " iterations");
        // The I_H residual carries straight into R_H, so polish while Newton still reduces it.
        for (int q = 0; q < 3 && ex.g != 0.0 && ex.dg > 0.0; ++q) {
            const double xn = x - ex.g / ex.dg;
            if (!(xn >= 0.0)) break;
            const Elim en = eliminate(k, xn, fl);
            if (!en.valid || !(std::fabs(en.g) < std::fabs(ex.g))) break;
            x = xn;
            ex = en;
        }
    }
    if (x == 0.0) ex = eliminate(k, 0.0, fl);

    StateVector s;
    s.I_H = x;
    s.S_H = ex.S_H;
    s.S_V = ex.S_V;
    s.I_V = ex.I_V;
    s.R_H = -(k.B_RH * x + k.C_RH) / k.A_RH;
    s.S_H = clip_or_throw(s.S_H, neg_tol, "S_H", clips);
    s.R_H = clip_or_throw(s.R_H, neg_tol, "R_H", clips);
    s.S_V = clip_or_throw(s.S_V, neg_tol, "S_V", clips);
    s.I_V = clip_or_throw(s.I_V, neg_tol, "I_V", clips);
    return s;
}

StateVector solve_step(int i, const StateVector& prev, const Histories& hist, const ModelParams& prm,
                       const TemperedOperators& ops, const StepSolveConfig& cfg, const ControlSchedule* ctl) {
    return solve_step(step_coefficients(i, prev, hist, prm, ops, ctl), prev, prm, cfg);
}

void validate_initial_state(const ModelParams& prm, const StateVector& s) {
    for (double v : {s.S_H, s.I_H, s.R_H, s.S_V, s.I_V})
        if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("initial state must be finite and non-negative");
    if (std::fabs(s.N_H() - prm.N_H) > 1e-9 * prm.N_H)
        throw DomainError("initial human compartments must sum to N_H");
}

Trajectory simulate(const ModelParams& prm, const StateVector& init, const GridSpec& grid,
                    const StepSolveConfig& cfg, const ControlSchedule* ctl) {
    const TemperedOperators ops(prm, grid);
    return simulate(prm, init, ops, cfg, ctl);
}

Trajectory simulate(const ModelParams& prm, const StateVector& init, const TemperedOperators& ops,
                    const StepSolveConfig& cfg, const ControlSchedule* ctl) {
    prm.validate();
    validate_initial_state(prm, init);
    const GridSpec& grid = ops.grid();
    const int n = grid.n_steps;
    if (ctl) ctl->validate(n + 1);

    Trajectory tr;
    tr.grid = grid;
    tr.states.reserve(n + 1);
    tr.states.push_back(init);
    tr.flux.assign(n + 1, 0.0);
    tr.X.assign(n + 1, 0.0);
    tr.Y.assign(n + 1, 0.0);
    tr.Z.assign(n + 1, 0.0);
    Histories hist;
    hist.I_H.reserve(n + 1);
    hist.I_V.reserve(n + 1);
    hist.I_H.push_back(init.I_H);
    hist.I_V.push_back(init.I_V);

    const double ball = std::pow(prm.b, prm.alpha) * prm.beta_VH / prm.N_H;
    const double h = grid.h;
    for (int i = 0; i < n; ++i) {
        const StepCoefficients k = step_coefficients(i, tr.states.back(), hist, prm, ops, ctl);
        StateVector s;
        try {
            s = solve_step(k, tr.states.back(), prm, cfg, &tr.clip_events);
        } catch (const ConvergenceError& e) {
            throw ConvergenceError("step " + std::to_string(i) + ": " + e.what());
        } catch (const NumericalError& e) {
            throw NumericalError("step " + std::to_string(i) + " (t = " + std::to_string(grid.t(i + 1)) +
                                 "): " + e.what());
        }
        double xv = (k.ex_X + k.g0_X * s.I_V) / h;
        double zv = (k.ex_Z + k.g0_Z * s.I_H) / h;
        if (cfg.floor_negative_force && (xv < 0.0 || zv < 0.0)) {
            ++tr.floor_events;
            xv = std::max(xv, 0.0);
            zv = std::max(zv, 0.0);
        }
        tr.X[i + 1] = xv;
        tr.Y[i + 1] = (k.ex_Y + k.g0_Y * s.I_H) / h;
        tr.Z[i + 1] = zv;
        const double psi = ctl ? ctl->psi[i] : 0.0;
        tr.flux[i + 1] = ball * (1.0 - psi) * s.S_H * tr.X[i + 1];
        tr.states.push_back(s);
        hist.I_H.push_back(s.I_H);
        hist.I_V.push_back(s.I_V);
    }
    tr.X[0] = tr.X[1];
    tr.Y[0] = tr.Y[1];
    tr.Z[0] = tr.Z[1];
    return tr;
}

std::vector<double> incidence_series(const Trajectory& tr, double week_length) {
    if (!(week_length > 0.0)) throw DomainError("incidence bin length must be positive");
    const double h = tr.grid.h;
    const int m = static_cast<int>(std::lround(week_length / h));
    if (m < 1 || std::fabs(m * h - week_length) > 1e-9 * week_length)
        throw DomainError("incidence bins must be a whole number of steps");
    const int n = static_cast<int>(tr.flux.size()) - 1;
    const int weeks = n / m;
    std::vector<double> out(weeks, 0.0);
    for (int w = 0; w < weeks; ++w) {
        double s = 0.0;
        for (int j = w * m + 1; j <= (w + 1) * m; ++j) s += tr.flux[j];
        out[w] = h * s;
    }
    return out;
}

double cumulative_cases(const Trajectory& tr) {
    double s = 0.0;
    for (std::size_t j = 1; j < tr.flux.size(); ++j) s += tr.flux[j];
    return tr.grid.h * s;
}

Trajectory reference_classical_simulate(const ModelParams& prm, const StateVector& init, double t_max,
                                        double out_step, double rel_tol) {
    prm.validate();
    validate_initial_state(prm, init);
    if (prm.alpha != 1.0 || prm.beta != 1.0 || prm.p != 1.0)
        throw DomainError("reference integrator needs alpha = beta = p = 1");
    if (!(out_step > 0.0) || !(t_max > 0.0)) throw DomainError("reference integrator: bad horizon");

    using State = std::array<double, 5>;
    const double L1 = prm.lambda1(), L3 = prm.lambda3(), r = prm.recovery_rate();
    const double muH = prm.mu_H, muV = prm.mu_V, N = prm.N_H, Pi = prm.Pi_V();
    auto rhs = [&](const State& x, State& dx, double) {
        const double inf_h = L1 * x[0] * x[4];
        const double inf_v = L3 * x[3] * x[1];
        dx[0] = muH * N - inf_h - muH * x[0];
        dx[1] = inf_h - r * x[1] - muH * x[1];
        dx[2] = r * x[1] - muH * x[2];
        dx[3] = Pi - inf_v - muV * x[3];
        dx[4] = inf_v - muV * x[4];
    };

    Trajectory tr;
    tr.grid = make_grid(out_step, t_max);
    const int n = tr.grid.n_steps;
    std::vector<double> times(n + 1);
    for (int i = 0; i <= n; ++i) times[i] = tr.grid.t(i);
    State x{init.S_H, init.I_H, init.R_H, init.S_V, init.I_V};
    namespace ode = boost::numeric::odeint;
    auto stepper = ode::make_dense_output(rel_tol * 1e-3, rel_tol, ode::runge_kutta_dopri5<State>());
    ode::integrate_times(stepper, rhs, x, times.begin(), times.end(), std::min(out_step, 0.01),
                         [&](const State& s, double) {
                             tr.states.push_back({s[0], s[1], s[2], s[3], s[4]});
                         });
    tr.flux.resize(tr.states.size());
    tr.X.resize(tr.states.size());
    tr.Y.resize(tr.states.size());
    tr.Z.resize(tr.states.size());
    for (std::size_t i = 0; i < tr.states.size(); ++i) {
        const auto& s = tr.states[i];
        tr.flux[i] = L1 * s.S_H * s.I_V;
        tr.X[i] = muV * s.I_V;
        tr.Y[i] = muH * s.I_H;
        tr.Z[i] = muH * s.I_H;
    }
    return tr;
}

InvariantReport check_invariants(const Trajectory& tr, const ModelParams& prm) {
    InvariantReport rep;
    if (tr.states.empty()) return rep;
    const double bound = std::max(tr.states.front().N_V(), prm.vector_capacity());
    rep.min_compartment = tr.states.front().S_H;
    for (const auto& s : tr.states) {
        rep.max_conservation_error = std::max(rep.max_conservation_error, std::fabs(s.N_H() - prm.N_H) / prm.N_H);
        rep.min_compartment = std::min({rep.min_compartment, s.S_H, s.I_H, s.R_H, s.S_V, s.I_V});
        rep.max_vector_ratio = std::max(rep.max_vector_ratio, s.N_V() / bound);
    }
    return rep;
}

void write_trajectory_csv(const std::string& path, const Trajectory& tr) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "t,S_H,I_H,R_H,S_V,I_V,flux\n";
    char buf[256];
    for (std::size_t i = 0; i < tr.states.size(); ++i) {
        const auto& s = tr.states[i];
        std::snprintf(buf, sizeof buf, "%.10g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n", tr.grid.t(static_cast<int>(i)),
                      s.S_H, s.I_H, s.R_H, s.S_V, s.I_V, tr.flux[i]);
        out << buf;
    }
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace tfd
