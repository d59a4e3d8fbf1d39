#pragma once

#include <array>
#include <string>
#include <vector>

#include "tfd/solver.hpp"

namespace tfd {

struct CostWeights {
    double A1 = 1.0, A2 = 10.0;
    double B1 = 5e-10, B2 = 1.0;  // larvicide (zeta)
    double B3 = 5e-10, B4 = 1.0;  // adulticide (kappa)
    double B5 = 5e-10, B6 = 5.0;  // personal protection (psi)
    double c_m = 0.5;
    void validate() const;
};

struct AdjointTrajectory {
    std::vector<std::array<double, 5>> lambda;  // (l1..l5) per node; zero at the final node
};

struct SweepConfig {
    double relaxation = 0.5;
    double conv_tol = 1e-4;
    int max_sweeps = 200;
    double min_relaxation = 1.0 / 64.0;
    void validate() const;
};

struct ActiveSet {
    bool psi = false, zeta = false, kappa = false;
    bool empty() const { return !psi && !zeta && !kappa; }
};

struct SweepResult {
    ControlSchedule schedule;
    Trajectory traj;
    AdjointTrajectory adjoint;
    std::vector<double> cost_history;
    std::vector<double> residual_history;
    std::vector<double> relaxation_history;
    bool converged = false;
    int sweeps = 0;
    double residual = 0;  // sup-norm of control_update(schedule) - schedule on the active controls
};

double cost(const Trajectory& traj, const ControlSchedule& sched, const CostWeights& w);

AdjointTrajectory adjoint_backward(const Trajectory& traj, const ControlSchedule& sched, const ModelParams& prm,
                                   const CostWeights& w);

// Pointwise minimiser of the Hamiltonian, clamped to [0,1]; inactive controls are set to 0.
ControlSchedule control_update(const Trajectory& traj, const AdjointTrajectory& adj, const ModelParams& prm,
                               const CostWeights& w, const ActiveSet& active = {true, true, true});

double sup_distance(const ControlSchedule& a, const ControlSchedule& b);

SweepResult forward_backward_sweep(const ModelParams& prm, const StateVector& init, const GridSpec& grid,
                                   const CostWeights& w, const ActiveSet& active, const SweepConfig& cfg = {},
                                   const StepSolveConfig& step = {});

struct StrategyReport {
    std::string name;
    ActiveSet active;
    double mean_psi = 0, mean_zeta = 0, mean_kappa = 0;
    double total_cases = 0;
    double cost = 0;
    bool converged = false;
    int sweeps = 0;
    double residual = 0;
};

// "baseline" or S1..S7.
ActiveSet strategy_controls(const std::string& name);
const std::vector<std::string>& strategy_names();

// Mean over weekly means of a nodal schedule.
double mean_weekly_rate(const std::vector<double>& u, const GridSpec& grid, double week_length = 7.0);

StrategyReport run_strategy(const std::string& name, const ModelParams& prm, const StateVector& init,
                            const GridSpec& grid, const CostWeights& w, const SweepConfig& cfg = {},
                            SweepResult* full = nullptr);

// Example starting point for control studies: 60% susceptible, 50 infected humans and about 0.95% of the
// vector carrying capacity infected, giving roughly 5000 uncontrolled cases over 52 weeks at the fitted values.
StateVector control_initial_state(const ModelParams& prm);

void write_strategy_csv(const std::string& path, const std::vector<StrategyReport>& rows);

}  // namespace tfd
