#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tfd/fracops.hpp"
#include "tfd/model.hpp"

namespace tfd {

struct StateVector {
    double S_H = 0, I_H = 0, R_H = 0, S_V = 0, I_V = 0;
    double N_H() const { return S_H + I_H + R_H; }
    double N_V() const { return S_V + I_V; }
};

// Grid-aligned control values (one per node) and the kill efficacy of adulticide.
struct ControlSchedule {
    std::vector<double> psi, zeta, kappa;
    double c_m = 0.5;

    static ControlSchedule zeros(int n_nodes, double c_m = 0.5);
    int size() const { return static_cast<int>(psi.size()); }
    void validate(int n_nodes) const;
    void clamp();
};

struct StepSolveConfig {
    double tol = 1e-10;  // scalar residual, relative to the magnitude of the equation's terms
    int max_iter = 100;
    double damping = 1.0;
    // Floor the tempered forces of infection at zero. Under adulticide the tempering rate mu_V no longer
    // matches the vector death rate, and the tempered operators can turn negative.
    bool floor_negative_force = true;
};

struct StepCoefficients {
    double A_SH, B_SH, C_SH;
    double A_IH, B_IH, C_IH, D_IH;
    double A_RH, B_RH, C_RH;
    double A_SV, B_SV, C_SV;
    double A_IV, B_IV, C_IV, D_IV;
    // explicit history parts and implicit weights, reused to form nodal operator values
    double ex_X, ex_Y, ex_Z, g0_X, g0_Y, g0_Z;
    double tX, tZ;  // (1-psi) transmission prefactors of the X and Z operators
};

// Weight tables for the three tempered operators:
//   X on I_V with (alpha, mu_V), Y on I_H with (beta, mu_H), Z on I_H with (p, mu_H).
class TemperedOperators {
public:
    TemperedOperators(const ModelParams& prm, const GridSpec& grid);
    const WeightTable& X() const { return *x_; }
    const WeightTable& Y() const { return *y_; }
    const WeightTable& Z() const { return *z_; }
    bool shared_human() const { return y_ == z_; }
    const GridSpec& grid() const { return x_->grid(); }

private:
    std::shared_ptr<const WeightTable> x_, y_, z_;
};

// Nodal values of I_H and I_V for t_0..t_i.
struct Histories {
    std::vector<double> I_H, I_V;
};

struct Trajectory {
    GridSpec grid;
    std::vector<StateVector> states;  // n_steps + 1 nodes
    std::vector<double> flux;         // new infections per day over the step ending at each node; flux[0] = 0
    std::vector<double> X, Y, Z;      // discrete tempered operator values per node; index 0 copies index 1
    int clip_events = 0;   // tolerated negative undershoots set to zero
    int floor_events = 0;  // steps where a force of infection was floored at zero
};

StepCoefficients step_coefficients(int i, const StateVector& prev, const Histories& hist, const ModelParams& prm,
                                   const TemperedOperators& ops, const ControlSchedule* ctl = nullptr);

// Solves the coupled bilinear step equations; increments *clips on tolerated undershoot.
StateVector solve_step(const StepCoefficients& k, const StateVector& prev, const ModelParams& prm,
                       const StepSolveConfig& cfg, int* clips = nullptr);

StateVector solve_step(int i, const StateVector& prev, const Histories& hist, const ModelParams& prm,
                       const TemperedOperators& ops, const StepSolveConfig& cfg,
                       const ControlSchedule* ctl = nullptr);

void validate_initial_state(const ModelParams& prm, const StateVector& init);

Trajectory simulate(const ModelParams& prm, const StateVector& init, const GridSpec& grid,
                    const StepSolveConfig& cfg = {}, const ControlSchedule* ctl = nullptr);
Trajectory simulate(const ModelParams& prm, const StateVector& init, const TemperedOperators& ops,
                    const StepSolveConfig& cfg = {}, const ControlSchedule* ctl = nullptr);

// New cases per bin of week_length days (bins that fit completely inside the horizon).
std::vector<double> incidence_series(const Trajectory& traj, double week_length = 7.0);
double cumulative_cases(const Trajectory& traj);

// Adaptive Dormand-Prince integration of the alpha = beta = p = 1 model, sampled every out_step days.
Trajectory reference_classical_simulate(const ModelParams& prm, const StateVector& init, double t_max,
                                        double out_step = 1.0, double rel_tol = 1e-9);

struct InvariantReport {
    double max_conservation_error = 0;  // max |S_H+I_H+R_H - N_H| / N_H
    double min_compartment = 0;
    double max_vector_ratio = 0;        // max N_V / max(N_V(0), Pi_V/mu_V)
    bool ok() const {
        return max_conservation_error <= 1e-9 && min_compartment >= 0.0 && max_vector_ratio <= 1.0 + 1e-9;
    }
};

InvariantReport check_invariants(const Trajectory& traj, const ModelParams& prm);

void write_trajectory_csv(const std::string& path, const Trajectory& traj);

}  // namespace tfd
