#include "tfd/optctl.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <Eigen/Dense>

#include "tfd/errors.hpp"

namespace tfd {

void CostWeights::validate() const {
    for (double v : {A1, A2, B1, B2, B3, B4, B5, B6, c_m})
        if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("cost weights must be finite and non-negative");
    if (!(B2 > 0.0 && B4 > 0.0 && B6 > 0.0)) throw ConfigError("quadratic control weights B2, B4, B6 must be positive");
}

void SweepConfig::validate() const {
    if (!(relaxation > 0.0 && relaxation <= 1.0)) throw ConfigError("sweep relaxation must lie in (0,1]");
    if (!(conv_tol > 0.0)) throw ConfigError("sweep tolerance must be positive");
    if (max_sweeps < 1) throw ConfigError("max_sweeps must be at least 1");
    if (!(min_relaxation > 0.0 && min_relaxation <= relaxation))
        throw ConfigError("min_relaxation must lie in (0, relaxation]");
}

double cost(const Trajectory& tr, const ControlSchedule& u, const CostWeights& w) {
    const int n = static_cast<int>(tr.states.size());
    if (u.size() != n) throw DomainError("cost: schedule and trajectory lengths differ");
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const StateVector& s = tr.states[i];
        const double NV = s.N_V();
        const double f = w.A1 * NV + w.A2 * s.I_H + w.B1 * s.S_V * u.zeta[i] + 0.5 * w.B2 * u.zeta[i] * u.zeta[i] +
                         w.B3 * NV * u.kappa[i] + 0.5 * w.B4 * u.kappa[i] * u.kappa[i] +
                         w.B5 * s.N_H() * u.psi[i] + 0.5 * w.B6 * u.psi[i] * u.psi[i];
        total += (i == 0 || i == n - 1) ? 0.5 * f : f;
    }
    return total * tr.grid.h;
}

AdjointTrajectory adjoint_backward(const Trajectory& tr, const ControlSchedule& u, const ModelParams& prm,
                                   const CostWeights& w) {
    const int n = static_cast<int>(tr.states.size());
    if (u.size() != n || static_cast<int>(tr.X.size()) != n || static_cast<int>(tr.Z.size()) != n)
        throw DomainError("adjoint: trajectory, tempered values and schedule must share the grid");
    const double h = tr.grid.h;
    const double N = prm.N_H;
    const double ka = std::pow(prm.b, prm.alpha) * prm.beta_VH / N;
    const double kp = std::pow(prm.b, prm.p) * prm.beta_HV / (N * std::pow(prm.C, prm.p));
    const double rH = prm.recovery_rate();
    const double rate_p = std::pow(prm.mu_H, 1.0 - prm.p);
    const double rate_a = std::pow(prm.mu_V, 1.0 - prm.alpha);
    const double muH = prm.mu_H;

    AdjointTrajectory adj;
    adj.lambda.assign(n, {0, 0, 0, 0, 0});
    Eigen::Matrix<double, 5, 5> M;
    Eigen::Matrix<double, 5, 1> f, next, cur;
    next.setZero();
    for (int i = n - 2; i >= 0; --i) {
        const StateVector& s = tr.states[i];
        const double q = 1.0 - u.psi[i];
        const double m = prm.mu_V + w.c_m * u.kappa[i];
        const double a1 = ka * q * tr.X[i];
        const double c2 = kp * rate_p * s.S_V * q;
        const double a4 = kp * q * tr.Z[i];
        const double c5 = ka * rate_a * q * s.S_H;
        // lambda' = M lambda + f
        M.setZero();
        M(0, 0) = a1 + muH;
        M(0, 1) = -a1;
        M(1, 1) = muH + rH;
        M(1, 2) = -rH;
        M(1, 3) = c2;
        M(1, 4) = -c2;
        M(2, 2) = muH;
        M(3, 3) = a4 + m;
        M(3, 4) = -a4;
        M(4, 0) = c5;
        M(4, 1) = -c5;
        M(4, 4) = m;
        f << 0.0, -w.A2, 0.0, -w.A1 - w.B1 * u.zeta[i] - w.B3 * u.kappa[i], -w.A1 - w.B3 * u.kappa[i];
        const Eigen::Matrix<double, 5, 5> Amat = Eigen::Matrix<double, 5, 5>::Identity() + h * M;
        cur = Amat.partialPivLu().solve(next - h * f);
        if (!cur.allFinite()) throw NumericalError("adjoint step " + std::to_string(i) + " produced non-finite values");
        cur(2) = 0.0;  // homogeneous with zero terminal value
        for (int c = 0; c < 5; ++c) adj.lambda[i][c] = cur(c);
        next = cur;
    }
    return adj;
}

ControlSchedule control_update(const Trajectory& tr, const AdjointTrajectory& adj, const ModelParams& prm,
                               const CostWeights& w, const ActiveSet& active) {
    const int n = static_cast<int>(tr.states.size());
    if (static_cast<int>(adj.lambda.size()) != n) throw DomainError("control_update: adjoint length mismatch");
    const double N = prm.N_H;
    const double ka = std::pow(prm.b, prm.alpha) * prm.beta_VH / N;
    const double kp = std::pow(prm.b, prm.p) * prm.beta_HV / (N * std::pow(prm.C, prm.p));
    ControlSchedule u = ControlSchedule::zeros(n, w.c_m);
    for (int i = 0; i < n; ++i) {
        const StateVector& s = tr.states[i];
        const auto& l = adj.lambda[i];
        if (active.psi) {
            const double v = ((l[4] - l[3]) * kp * s.S_V * tr.Z[i] + (l[1] - l[0]) * ka * s.S_H * tr.X[i] -
                              w.B5 * s.N_H()) / w.B6;
            u.psi[i] = std::clamp(v, 0.0, 1.0);
        }
        if (active.zeta) u.zeta[i] = std::clamp((l[3] * prm.Pi_V() - w.B1 * s.S_V) / w.B2, 0.0, 1.0);
        if (active.kappa)
            u.kappa[i] = std::clamp((w.c_m * (l[3] * s.S_V + l[4] * s.I_V) - w.B3 * s.N_V()) / w.B4, 0.0, 1.0);
    }
    return u;
}

double sup_distance(const ControlSchedule& a, const ControlSchedule& b) {
    if (a.size() != b.size()) throw DomainError("sup_distance: length mismatch");
    double d = 0.0;
    for (int i = 0; i < a.size(); ++i)
        d = std::max({d, std::fabs(a.psi[i] - b.psi[i]), std::fabs(a.zeta[i] - b.zeta[i]),
                      std::fabs(a.kappa[i] - b.kappa[i])});
    return d;
}

namespace {

struct Evaluated {
    Trajectory traj;
    AdjointTrajectory adj;
    ControlSchedule update;
    double J;
};

Evaluated evaluate(const ModelParams& prm, const StateVector& init, const TemperedOperators& ops,
                   const CostWeights& w, const ActiveSet& active, const ControlSchedule& u,
                   const StepSolveConfig& step) {
    Evaluated e;
    e.traj = simulate(prm, init, ops, step, &u);
    e.adj = adjoint_backward(e.traj, u, prm, w);
    e.update = control_update(e.traj, e.adj, prm, w, active);
    e.J = cost(e.traj, u, w);
    return e;
}

}  // namespace

SweepResult forward_backward_sweep(const ModelParams& prm, const StateVector& init, const GridSpec& grid,
                                   const CostWeights& w, const ActiveSet& active, const SweepConfig& cfg,
                                   const StepSolveConfig& step) {
    w.validate();
    cfg.validate();
    const TemperedOperators ops(prm, grid);
    const int n = grid.n_steps + 1;

    SweepResult out;
    ControlSchedule u = ControlSchedule::zeros(n, w.c_m);
    Evaluated cur = evaluate(prm, init, ops, w, active, u, step);
    double omega = cfg.relaxation;

    ControlSchedule best_u = u;
    Evaluated best = cur;
    double best_res = std::numeric_limits<double>::infinity();

    for (int k = 0; k <= cfg.max_sweeps; ++k) {
        out.cost_history.push_back(cur.J);
        const double res = sup_distance(cur.update, u);
        out.residual_history.push_back(res);
        out.relaxation_history.push_back(omega);
        if (res < best_res) {
            best_res = res;
            best_u = u;
            best = cur;
        }
        if (res < cfg.conv_tol || active.empty()) {
            out.converged = true;
            out.sweeps = k;
            break;
        }
        if (k == cfg.max_sweeps) {
            out.sweeps = k;
            break;
        }
        // geometric backoff when the cost goes back up
        const std::size_t nc = out.cost_history.size();
        const bool cost_up = nc >= 2 && out.cost_history[nc - 1] > out.cost_history[nc - 2] * (1.0 + 1e-12);
        if (cost_up) omega = std::max(cfg.min_relaxation, 0.5 * omega);

        ControlSchedule next = u;
        for (int i = 0; i < n; ++i) {
            next.psi[i] = omega * cur.update.psi[i] + (1.0 - omega) * u.psi[i];
            next.zeta[i] = omega * cur.update.zeta[i] + (1.0 - omega) * u.zeta[i];
            next.kappa[i] = omega * cur.update.kappa[i] + (1.0 - omega) * u.kappa[i];
        }
        next.clamp();
        u = std::move(next);
        cur = evaluate(prm, init, ops, w, active, u, step);
    }

    if (!out.converged) {
        u = best_u;
        cur = std::move(best);
    }
    out.residual = out.converged ? sup_distance(cur.update, u) : best_res;
    out.schedule = std::move(u);
    out.traj = std::move(cur.traj);
    out.adjoint = std::move(cur.adj);
    return out;
}

const std::vector<std::string>& strategy_names() {
    static const std::vector<std::string> names{"baseline", "S1", "S2", "S3", "S4", "S5", "S6", "S7"};
    return names;
}

ActiveSet strategy_controls(const std::string& name) {
    if (name == "baseline") return {false, false, false};
    if (name == "S1") return {true, false, false};
    if (name == "S2") return {false, true, false};
    if (name == "S3") return {false, false, true};
    if (name == "S4") return {true, true, false};
    if (name == "S5") return {true, false, true};
    if (name == "S6") return {false, true, true};
    if (name == "S7") return {true, true, true};
    throw ConfigError("unknown strategy '" + name + "' (expected baseline or S1..S7)");
}

double mean_weekly_rate(const std::vector<double>& u, const GridSpec& grid, double week_length) {
    if (u.empty()) return 0.0;
    const int m = static_cast<int>(std::lround(week_length / grid.h));
    const int n = static_cast<int>(u.size()) - 1;
    if (m < 1 || std::fabs(m * grid.h - week_length) > 1e-9 * week_length || n < m) {
        double s = 0.0;
        for (double v : u) s += v;
        return s / u.size();
    }
    const int weeks = n / m;
    double total = 0.0;
    for (int w = 0; w < weeks; ++w) {
        double s = 0.0;
        for (int j = w * m + 1; j <= (w + 1) * m; ++j) s += u[j];
        total += s / m;
    }
    return total / weeks;
}

StrategyReport run_strategy(const std::string& name, const ModelParams& prm, const StateVector& init,
                            const GridSpec& grid, const CostWeights& w, const SweepConfig& cfg, SweepResult* full) {
    StrategyReport rep;
    rep.name = name;
    rep.active = strategy_controls(name);
    SweepResult r = forward_backward_sweep(prm, init, grid, w, rep.active, cfg);
    rep.mean_psi = mean_weekly_rate(r.schedule.psi, grid);
    rep.mean_zeta = mean_weekly_rate(r.schedule.zeta, grid);
    rep.mean_kappa = mean_weekly_rate(r.schedule.kappa, grid);
    rep.total_cases = cumulative_cases(r.traj);
    rep.cost = cost(r.traj, r.schedule, w);
    rep.converged = r.converged;
    rep.sweeps = r.sweeps;
    rep.residual = r.residual;
    if (full) *full = std::move(r);
    return rep;
}

StateVector control_initial_state(const ModelParams& prm) {
    const double cap = prm.vector_capacity();
    StateVector s;
    s.S_H = 0.6 * prm.N_H;
    s.I_H = 50.0;
    s.R_H = prm.N_H - s.S_H - s.I_H;
    s.I_V = 0.0095 * cap;
    s.S_V = cap - s.I_V;
    return s;
}

void write_strategy_csv(const std::string& path, const std::vector<StrategyReport>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "strategy,mean_psi,mean_zeta,mean_kappa,total_cases,cost,converged\n";
    char buf[512];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%.6g,%.6g,%.6g,%.6g,%.10g,%d\n", r.name.c_str(), r.mean_psi, r.mean_zeta,
                      r.mean_kappa, r.total_cases, r.cost, r.converged ? 1 : 0);
        out << buf;
    }
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace tfd
