#include <doctest.h>

#include <cfloat>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "tfd/errors.hpp"
#include "tfd/optctl.hpp"
#include "tfd/solver.hpp"

using namespace tfd;

namespace {

StateVector dfe_state(const ModelParams& p) { return {p.N_H, 0.0, 0.0, p.vector_capacity(), 0.0}; }

ModelParams classical_params() {
    ModelParams p;
    p.alpha = p.beta = p.p = 1.0;
    return p;
}

double rel(double a, double b) { return std::fabs(a - b) / std::max(std::fabs(b), 1e-300); }

// Running total of h * flux, one entry per node.
std::vector<double> cumulative_curve(const Trajectory& tr) {
    std::vector<double> c(tr.flux.size(), 0.0);
    for (std::size_t j = 1; j < c.size(); ++j) c[j] = c[j - 1] + tr.grid.h * tr.flux[j];
    return c;
}

}  // namespace

TEST_CASE("first step from a disease-free history") {
    const ModelParams p;
    const GridSpec g = make_grid(0.2, 10.0);
    const TemperedOperators ops(p, g);
    const StateVector s0 = dfe_state(p);
    Histories hist{{0.0}, {0.0}};
    const StepCoefficients k = step_coefficients(0, s0, hist, p, ops);
    CHECK(k.D_IH == doctest::Approx(-s0.I_H));
    CHECK(k.C_SH == doctest::Approx(-s0.S_H - g.h * p.mu_H * p.N_H).epsilon(1e-15));
    const StateVector s1 = solve_step(k, s0, p, StepSolveConfig{});
    CHECK(s1.S_H == doctest::Approx(s0.S_H).epsilon(1e-12));
    CHECK(s1.I_H == doctest::Approx(0.0));
    CHECK(s1.R_H == doctest::Approx(0.0));
    CHECK(s1.S_V == doctest::Approx(s0.S_V).epsilon(1e-12));
    CHECK(s1.I_V == doctest::Approx(0.0));
}

TEST_CASE("step coefficients from independently assembled weights") {
    const ModelParams p;
    const GridSpec g = make_grid(0.2, 10.0);
    const TemperedOperators ops(p, g);
    const int i = 3;
    Histories hist;
    for (int j = 0; j <= i; ++j) {
        hist.I_H.push_back(50.0 + 7.0 * j);
        hist.I_V.push_back(1.0e4 * (1.0 + 0.1 * j));
    }
    const StateVector prev{1.4e6 - 71.0, 71.0, 947762.0, 1.6e7, 1.3e5};
    ControlSchedule ctl = ControlSchedule::zeros(g.n_steps + 1, 0.5);
    ctl.psi[i] = 0.3;
    ctl.zeta[i] = 0.2;
    ctl.kappa[i] = 0.4;

    const oracle::Weights wx{p.alpha, p.mu_V, g.h, true};
    const oracle::Weights wy{p.beta, p.mu_H, g.h, true};
    auto ex = [&](const oracle::Weights& w, const std::vector<double>& y) {
        std::vector<double> v(y);
        v.push_back(0.0);
        return w.bracket(v, i, g.theta);
    };
    auto g0 = [&](const oracle::Weights& w) {
        std::vector<double> v(i + 2, 0.0);
        v[i + 1] = 1.0;
        return w.bracket(v, i, g.theta);
    };
    const double exX = ex(wx, hist.I_V), g0X = g0(wx), exY = ex(wy, hist.I_H), g0Y = g0(wy);
    const double N = p.N_H, h = g.h, hm = 1.0 + h * p.mu_H;
    const double tX = 0.7 * std::pow(p.b, p.alpha) * p.beta_VH / N;
    const double tZ = 0.7 * std::pow(p.b, p.p) * p.beta_HV / (N * std::pow(p.C, p.p));
    const double rY = 1.0 / std::pow(p.C, p.beta);
    const double m = p.mu_V + 0.5 * 0.4;

    const StepCoefficients k = step_coefficients(i, prev, hist, p, ops, &ctl);
    const double eps = 1e-9;
    CHECK(k.A_SH == doctest::Approx(hm + tX * exX).epsilon(eps));
    CHECK(k.B_SH == doctest::Approx(tX * g0X).epsilon(eps));
    CHECK(k.C_SH == doctest::Approx(-prev.S_H - h * p.mu_H * N).epsilon(eps));
    CHECK(k.A_IH == doctest::Approx(-tX * exX).epsilon(eps));
    CHECK(k.B_IH == doctest::Approx(hm + rY * g0Y).epsilon(eps));
    CHECK(k.C_IH == doctest::Approx(-tX * g0X).epsilon(eps));
    CHECK(k.D_IH == doctest::Approx(-prev.I_H + rY * exY).epsilon(eps));
    CHECK(k.A_RH == doctest::Approx(hm).epsilon(eps));
    CHECK(k.B_RH == doctest::Approx(-rY * g0Y).epsilon(eps));
    CHECK(k.C_RH == doctest::Approx(-prev.R_H - rY * exY).epsilon(eps));
    CHECK(k.A_SV == doctest::Approx(1.0 + h * m + tZ * exY).epsilon(eps));
    CHECK(k.B_SV == doctest::Approx(tZ * g0Y).epsilon(eps));
    CHECK(k.C_SV == doctest::Approx(-prev.S_V - h * p.Pi_V() * 0.8).epsilon(eps));
    CHECK(k.A_IV == doctest::Approx(-tZ * exY).epsilon(eps));
    CHECK(k.B_IV == doctest::Approx(-tZ * g0Y).epsilon(eps));
    CHECK(k.C_IV == doctest::Approx(1.0 + h * m).epsilon(eps));
    CHECK(k.D_IV == doctest::Approx(-prev.I_V).epsilon(eps));
}

TEST_CASE("distinct human orders use separate operators") {
    ModelParams p;
    p.p = 1.0;
    const GridSpec g = make_grid(0.2, 4.0);
    const TemperedOperators ops(p, g);
    CHECK_FALSE(ops.shared_human());
    Histories hist{{40.0, 45.0, 52.0}, {1e4, 1.1e4, 1.2e4}};
    const StepCoefficients k = step_coefficients(2, dfe_state(p), hist, p, ops);
    const oracle::Weights wz{1.0, p.mu_H, g.h, true};
    std::vector<double> v = hist.I_H;
    v.push_back(0.0);
    CHECK(k.ex_Z == doctest::Approx(wz.bracket(v, 2, g.theta)).epsilon(1e-9));
    CHECK(k.ex_Z != doctest::Approx(k.ex_Y).epsilon(1e-6));
}

TEST_CASE("history shorter than the step index is rejected") {
    const ModelParams p;
    const GridSpec g = make_grid(0.2, 4.0);
    const TemperedOperators ops(p, g);
    Histories hist{{1.0, 2.0}, {1.0, 2.0}};
    CHECK_THROWS_AS(step_coefficients(4, dfe_state(p), hist, p, ops), DomainError);
    CHECK_THROWS_AS(step_coefficients(g.n_steps, dfe_state(p), hist, p, ops), DomainError);
}

TEST_CASE("unit orders: one step matches backward Euler to second order") {
    const ModelParams p = classical_params();
    const StateVector s0 = control_initial_state(p);
    const oracle::State5 x0{s0.S_H, s0.I_H, s0.R_H, s0.S_V, s0.I_V};
    const double hs[3] = {0.05, 0.025, 0.0125};
    double err[3];
    for (int c = 0; c < 3; ++c) {
        const Trajectory tr = simulate(p, s0, make_grid(hs[c], hs[c]));
        const StateVector& s = tr.states.back();
        const oracle::State5 be = oracle::backward_euler(p, x0, hs[c]);
        const double got[5] = {s.S_H, s.I_H, s.R_H, s.S_V, s.I_V};
        err[c] = 0.0;
        for (int q = 0; q < 5; ++q) err[c] = std::max(err[c], std::fabs(got[q] - be[q]) / std::max(1.0, std::fabs(x0[q])));
    }
    for (int c = 0; c < 2; ++c) {
        CHECK(err[c] / err[c + 1] >= 3.0);
        CHECK(err[c] / err[c + 1] <= 5.0);
    }
}

TEST_CASE("each step conserves the human population") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int rep = 0; rep < 5; ++rep) {
        ModelParams p;
        p.alpha = 0.2 + 0.8 * U(rng);
        p.beta = 0.2 + 0.8 * U(rng);
        p.p = p.beta + (1.0 - p.beta) * U(rng);
        const Trajectory tr = simulate(p, control_initial_state(p), make_grid(0.25, 60.0));
        for (const auto& s : tr.states) CHECK(std::fabs(s.N_H() - p.N_H) <= 1e-9 * p.N_H);
    }
}

TEST_CASE("disease-free initial state stays constant") {
    const ModelParams p;
    const StateVector s0 = dfe_state(p);
    const Trajectory tr = simulate(p, s0, make_grid(0.5, 100.0));
    REQUIRE(tr.states.size() == 201u);
    for (const auto& s : tr.states) {
        CHECK(s.S_H == doctest::Approx(s0.S_H).epsilon(1e-12));
        CHECK(s.I_H == 0.0);
        CHECK(s.S_V == doctest::Approx(s0.S_V).epsilon(1e-12));
        CHECK(s.I_V == 0.0);
    }
    for (double w : incidence_series(tr)) CHECK(w == 0.0);
}

TEST_CASE("positivity, conservation and vector bound along trajectories") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int rep = 0; rep < 4; ++rep) {
        ModelParams p;
        p.alpha = 0.2 + 0.8 * U(rng);
        p.beta = 0.2 + 0.8 * U(rng);
        p.p = p.beta + (1.0 - p.beta) * U(rng);
        p.b = 1.7 + 5.3 * U(rng);
        p.mu_V = 0.14 + 1.61 * U(rng);
        const StateVector s0 = control_initial_state(p);
        const Trajectory tr = simulate(p, s0, make_grid(0.5, 200.0));
        const InvariantReport inv = check_invariants(tr, p);
        CHECK(inv.ok());
        const double cap = std::max(s0.N_V(), p.vector_capacity());
        for (const auto& s : tr.states) {
            CHECK(std::min({s.S_H, s.I_H, s.R_H, s.S_V, s.I_V}) >= 0.0);
            CHECK(s.N_V() <= cap * (1.0 + 1e-9));
        }
    }
}

TEST_CASE("invalid initial states are rejected") {
    const ModelParams p;
    StateVector s = control_initial_state(p);
    s.S_H += 10.0;
    CHECK_THROWS_AS(simulate(p, s, make_grid(0.5, 5.0)), DomainError);
    s = control_initial_state(p);
    s.I_V = -1.0;
    CHECK_THROWS_AS(simulate(p, s, make_grid(0.5, 5.0)), DomainError);
}

TEST_CASE("weekly incidence adds up to the cumulative count") {
    const ModelParams p;
    const Trajectory tr = simulate(p, control_initial_state(p), make_grid(0.2, 364.0));
    const auto w = incidence_series(tr);
    REQUIRE(w.size() == 52u);
    double sum = 0.0;
    for (double x : w) sum += x;
    CHECK(sum == doctest::Approx(cumulative_cases(tr)).epsilon(1e-12));
    CHECK(incidence_series(tr, 14.0).size() == 26u);
    CHECK_THROWS(incidence_series(tr, 0.3));
}

TEST_CASE("weekly incidence equals the susceptible balance of each step") {
    // S_H^{i+1} = S_H^i + h mu_H (N_H - S_H^{i+1}) - new infections, read off the stored states.
    const ModelParams p;
    const Trajectory tr = simulate(p, control_initial_state(p), make_grid(0.2, 364.0));
    const auto w = incidence_series(tr);
    const int per_week = 35;
    for (std::size_t k = 0; k < w.size(); ++k) {
        double sum = 0.0;
        for (int j = static_cast<int>(k) * per_week; j < static_cast<int>(k + 1) * per_week; ++j) {
            const double a = tr.states[j].S_H, b = tr.states[j + 1].S_H;
            sum += a - b + tr.grid.h * p.mu_H * (p.N_H - b);
        }
        // late weeks carry a few thousandths of a case, below the rounding of S_H differences
        CHECK(std::fabs(w[k] - sum) <= 1e-6 * sum + per_week * 8.0 * DBL_EPSILON * p.N_H);
    }
}

TEST_CASE("weekly incidence against trapezoidal quadrature of the flux") {
    const ModelParams p;
    const Trajectory tr = simulate(p, control_initial_state(p), make_grid(0.2, 364.0));
    const auto w = incidence_series(tr);
    const int per_week = 35;
    double worst = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        double q = 0.0;
        for (int j = static_cast<int>(k) * per_week; j < static_cast<int>(k + 1) * per_week; ++j)
            q += 0.5 * tr.grid.h * (tr.flux[j] + tr.flux[j + 1]);
        worst = std::max(worst, rel(w[k], q));
    }
    MESSAGE("worst weekly relative difference " << worst);
    CHECK(worst < 1e-6);
}

TEST_CASE("grid refinement changes weekly incidence by at most 1%") {
    const ModelParams p;
    const StateVector s0 = control_initial_state(p);
    const auto a = incidence_series(simulate(p, s0, make_grid(0.2, 364.0)));
    const auto b = incidence_series(simulate(p, s0, make_grid(0.1, 364.0)));
    double worst = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, rel(a[k], b[k]));
    MESSAGE("worst weekly relative change " << worst);
    CHECK(worst <= 0.01);
}

TEST_CASE("larger protection gives fewer cumulative cases at every time") {
    const ModelParams p;
    const StateVector s0 = control_initial_state(p);
    const GridSpec g = make_grid(0.5, 120.0);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int rep = 0; rep < 4; ++rep) {
        ControlSchedule lo = ControlSchedule::zeros(g.n_steps + 1), hi = lo;
        for (int j = 0; j <= g.n_steps; j += 14) {
            const double a = 0.8 * U(rng), d = (1.0 - a) * U(rng);
            for (int q = j; q < std::min(j + 14, g.n_steps + 1); ++q) {
                lo.psi[q] = a;
                hi.psi[q] = a + d;
            }
        }
        const auto cl = cumulative_curve(simulate(p, s0, g, {}, &lo));
        const auto ch = cumulative_curve(simulate(p, s0, g, {}, &hi));
        bool ordered = true;
        for (std::size_t j = 0; j < cl.size(); ++j) ordered = ordered && ch[j] <= cl[j] * (1.0 + 1e-12);
        CHECK(ordered);
        CHECK(ch.back() < cl.back());
    }
}

TEST_CASE("classical reference integrator") {
    const ModelParams p = classical_params();
    SUBCASE("disease-free state is constant") {
        const StateVector s0 = dfe_state(p);
        const Trajectory tr = reference_classical_simulate(p, s0, 50.0);
        for (const auto& s : tr.states) {
            CHECK(s.S_H == doctest::Approx(s0.S_H).epsilon(1e-12));
            CHECK(s.I_V == doctest::Approx(0.0));
        }
    }
    SUBCASE("matches fine fixed-step RK4 and conserves N_H") {
        const StateVector s0 = control_initial_state(p);
        const Trajectory tr = reference_classical_simulate(p, s0, 70.0, 7.0);
        REQUIRE(tr.states.size() == 11u);
        oracle::State5 x{s0.S_H, s0.I_H, s0.R_H, s0.S_V, s0.I_V};
        for (int k = 1; k <= 10; ++k) {
            x = oracle::rk4(p, x, 7.0, 0.002);
            const StateVector& s = tr.states[k];
            CHECK(rel(s.S_H, x[0]) < 1e-6);
            CHECK(rel(s.I_H, x[1]) < 1e-6);
            CHECK(rel(s.I_V, x[4]) < 1e-6);
            CHECK(std::fabs(s.N_H() - p.N_H) <= 1e-9 * p.N_H);
        }
    }
    SUBCASE("fractional orders are rejected") {
        ModelParams q = p;
        q.alpha = 0.5;
        CHECK_THROWS_AS(reference_classical_simulate(q, control_initial_state(q), 10.0), DomainError);
    }
}

TEST_CASE("trajectory csv layout") {
    const ModelParams p;
    const Trajectory tr = simulate(p, control_initial_state(p), make_grid(0.5, 2.0));
    const std::string path = "test_solver_traj.csv";
    write_trajectory_csv(path, tr);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "t,S_H,I_H,R_H,S_V,I_V,flux");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 5);
    std::remove(path.c_str());
}
