#pragma once

#include <span>
#include <vector>

namespace tfd {

struct GridSpec {
    double h = 0.2;      // days
    double theta = 0.0;  // 1 = rectangle, 0 = trapezoidal
    int n_steps = 1;

    double t_max() const { return h * n_steps; }
    double t(int i) const { return h * i; }
    void validate() const;
};

// Uniform grid covering [0, t_max] with n = ceil(t_max/h) steps.
GridSpec make_grid(double h, double t_max, double theta = 0.0);

// Tempered operator e^(-mu t) RL D^(1-order)[ y e^(mu t) ].
struct TemperedOrder {
    double order = 1.0;        // in (0,1]
    double temper_rate = 1.0;  // mu > 0, 1/day
    void validate() const;
};

struct RectangleRow {
    std::vector<double> omega, omega_tilde;  // j = 0..i
};

struct TrapezoidRow {
    std::vector<double> omega, U, omega_tilde, U_tilde;  // j = 0..i
};

// All weight families depend on j and i only through the lag k = i - j, so the table keeps one
// value per lag:
//   omega^R_k, omega~^R_k = -omega^R_{k-1}, omega^T_k, U_k = omega^T_{k-1},
//   omega~^T_k, U~_k = omega~^T_{k-1}   (the k-1 families vanish at k = 0).
// The theta blend collapses into one kernel G acting on y_{i+1-l} plus a separate y_0 weight.
class WeightTable {
public:
    WeightTable(const TemperedOrder& ord, const GridSpec& grid);

    const TemperedOrder& order() const { return ord_; }
    const GridSpec& grid() const { return grid_; }
    int max_lag() const { return static_cast<int>(rect_.size()) - 1; }

    double rect(int k) const { return rect_[k]; }
    double rect_tilde(int k) const { return k == 0 ? 0.0 : -rect_[k - 1]; }
    double trap(int k) const { return trap_[k]; }
    double trap_U(int k) const { return k == 0 ? 0.0 : trap_[k - 1]; }
    double trap_tilde(int k) const { return trapt_[k]; }
    double trap_tilde_U(int k) const { return k == 0 ? 0.0 : trapt_[k - 1]; }

    // Coefficient of the newest node y_{i+1} in the bracket.
    double implicit_coef() const { return kernel_.front(); }

    // Part of the bracket at step i carried by y_0..y_i (y must hold at least i+1 values).
    double explicit_sum(const double* y, int i) const;

    // Full theta bracket at step i; y holds y_0..y_{i+1}.
    double bracket(const double* y, int i) const;

    // Discrete value of the tempered operator at t_{i+1}: bracket / h.
    double value(const double* y, int i) const { return bracket(y, i) / grid_.h; }

private:
    TemperedOrder ord_;
    GridSpec grid_;
    std::vector<double> rect_, trap_, trapt_;
    std::vector<double> kernel_rev_;  // G_l stored at index L - l for forward dot products
    std::vector<double> kernel_;      // G_l
    std::vector<double> first_;       // weight of y_0 at step i
};

RectangleRow rectangle_weights(int i, const GridSpec& grid, const TemperedOrder& ord);
TrapezoidRow trapezoid_weights(int i, const GridSpec& grid, const TemperedOrder& ord);

// Theta-blended bracket multiplying e^(mu (i+1) h)/h; hist holds y(t_0..t_{i+1}).
double tempered_history_sum(std::span<const double> hist, int i, const WeightTable& table);

// Exact e^(-mu t) RL D^(1-a)[e^(mu t)] for the constant function 1.
double tempered_deriv_const_oracle(const TemperedOrder& ord, double t);

// temper_rate^y, the long-time proportionality constant of the tempered operator.
double asymptotic_rate(const TemperedOrder& ord, double y);

}  // namespace tfd
