#pragma once

#include <array>
#include <optional>

#include <Eigen/Dense>

namespace tfd {

struct ModelParams {
    double N_H = 2347833.0;    // persons
    double mu_H = 2.4456e-4;   // 1/day
    double alpha = 0.2352;     // vector-to-human transmission order
    double beta = 0.9918;      // recovery order
    double p = 0.9918;         // human-to-vector transmission order
    double b = 3.7578;         // bites/day
    double beta_VH = 0.0135;
    double beta_HV = 0.9405;
    double mu_V = 0.1428;      // 1/day
    double C = 1.0;            // days
    double delta = 1.0470;

    double Pi_V() const { return delta * N_H; }
    double vector_capacity() const { return Pi_V() / mu_V; }
    // Long-time rates of the three tempered operators.
    double lambda1() const;    // b^a beta_VH mu_V^(1-a) / N_H
    double lambda3() const;    // b^p beta_HV mu_H^(1-p) / (N_H C^p)
    double recovery_rate() const;  // mu_H^(1-beta) / C^beta
    double K() const { return mu_H + recovery_rate(); }

    // Throws DomainError unless all structural invariants hold.
    void validate() const;
    // Biological ranges for b, mu_V, delta (the orders and probabilities are checked by validate()).
    bool within_biological_ranges() const;
};

// Fitted means used throughout the examples, with mu_H, N_H and C held fixed.
ModelParams fitted_params();

double r0(const ModelParams& prm);

struct NgmPair {
    Eigen::Matrix2d F, V, FVinv;
};

NgmPair ngm(const ModelParams& prm);
double spectral_radius(const Eigen::Matrix2d& m);

struct RouthRecord {
    double A1 = 0, B1 = 0, C1 = 0, A1B1_minus_C1 = 0;
    bool stable = false;
};

using Reduced = std::array<double, 3>;  // (S_H, I_H, I_V)

struct EquilibriumReport {
    enum class Kind { DiseaseFree, Endemic };
    Kind kind = Kind::DiseaseFree;
    Reduced state{};
    std::array<long double, 3> state_ld{};  // unrounded coordinates the residual refers to
    double r0 = 0;
    double residual = 0;
    std::optional<RouthRecord> routh;
};

EquilibriumReport disease_free_equilibrium(const ModelParams& prm);
std::optional<EquilibriumReport> endemic_equilibrium(const ModelParams& prm);
RouthRecord endemic_stability(const ModelParams& prm);

// Reduced three-state right-hand side with each tempered term replaced by its long-time rate.
Reduced classical_limit_rhs(const ModelParams& prm, const Reduced& s);

// Max absolute defect of the reduced steady-state equations, evaluated in extended precision.
long double steady_state_residual(const ModelParams& prm, const std::array<long double, 3>& s);

// Jacobian of classical_limit_rhs.
Eigen::Matrix3d reduced_jacobian(const ModelParams& prm, const Reduced& s);

}  // namespace tfd
