#include "tfd/fracops.hpp"

#include <cmath>
#include <string>

#include <boost/math/quadrature/gauss.hpp>

#include "tfd/errors.hpp"
#include "tfd/specfun.hpp"

namespace tfd {

void GridSpec::validate() const {
    if (!(h > 0.0) || !std::isfinite(h)) throw DomainError("grid: h must be positive");
    if (!(theta >= 0.0 && theta <= 1.0)) throw DomainError("grid: theta must lie in [0,1]");
    if (n_steps < 1) throw DomainError("grid: n_steps must be at least 1");
}

GridSpec make_grid(double h, double t_max, double theta) {
    if (!(h > 0.0)) throw DomainError("grid: h must be positive");
    if (!(t_max > 0.0)) throw DomainError("grid: t_max must be positive");
    GridSpec g;
    g.h = h;
    g.theta = theta;
    g.n_steps = static_cast<int>(std::ceil(t_max / h - 1e-9));
    g.validate();
    return g;
}

void TemperedOrder::validate() const {
    if (!(order > 0.0 && order <= 1.0))
        throw DomainError("tempered order must lie in (0,1], got " + std::to_string(order));
    if (!(temper_rate > 0.0) || !std::isfinite(temper_rate))
        throw DomainError("tempering rate must be positive, got " + std::to_string(temper_rate));
}

namespace {

struct CellIntegrals {
    double r;   // int u^(a-1) e^(-u)
    double lo;  // int (u - x0) u^(a-1) e^(-u)
    double hi;  // int (x1 - u) u^(a-1) e^(-u)
};

template <int N>
void gauss_accumulate(double a, double b, double a_exp, double x0, double x1, CellIntegrals& c) {
    using G = boost::math::quadrature::gauss<double, N>;
    const auto& xs = G::abscissa();
    const auto& ws = G::weights();
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    auto add = [&](double u, double w) {
        const double f = w * half * std::exp((a_exp - 1.0) * std::log(u) - u);
        c.r += f;
        c.lo += (u - x0) * f;
        c.hi += (x1 - u) * f;
    };
    for (std::size_t q = 0; q < xs.size(); ++q) {
        if (xs[q] == 0.0) {
            add(mid, ws[q]);
        } else {
            add(mid - half * xs[q], ws[q]);
            add(mid + half * xs[q], ws[q]);
        }
    }
}

// Cell [x0, x1] with x0 > 0: smooth integrand, Gauss-Legendre on sub-cells of width <= 1.
CellIntegrals cell_integrals(double x0, double x1, double a, int k) {
    CellIntegrals c{0.0, 0.0, 0.0};
    const int m = std::max(1, static_cast<int>(std::ceil(x1 - x0)));
    const double w = (x1 - x0) / m;
    for (int s = 0; s < m; ++s) {
        const double lo = x0 + s * w;
        const double hi = (s + 1 == m) ? x1 : lo + w;
        if (k < 8)
            gauss_accumulate<20>(lo, hi, a, x0, x1, c);
        else
            gauss_accumulate<10>(lo, hi, a, x0, x1, c);
    }
    return c;
}

// First cell [0, x]: contains the u^(a-1) endpoint singularity.
CellIntegrals first_cell(double x, double a) {
    CellIntegrals c;
    c.r = lower_incomplete_gamma(x, a);
    c.lo = lower_incomplete_gamma(x, a + 1.0);
    if (x < 1.0) {
        // int_0^x (x-u) u^(a-1) e^-u du = sum_n (-1)^n x^(a+n+1) / (n! (a+n)(a+n+1))
        double sum = 0.0, fact = 1.0, xn = std::pow(x, a + 1.0);
        for (int n = 0; n < 60; ++n) {
            const double term = xn / (fact * (a + n) * (a + n + 1.0));
            sum += (n & 1) ? -term : term;
            if (std::fabs(term) < 1e-18 * std::fabs(sum)) break;
            xn *= x;
            fact *= (n + 1);
        }
        c.hi = sum;
    } else {
        c.hi = x * c.r - c.lo;
    }
    return c;
}

}  // namespace

WeightTable::WeightTable(const TemperedOrder& ord, const GridSpec& grid) : ord_(ord), grid_(grid) {
    ord.validate();
    grid.validate();
    const int L = grid.n_steps;
    const double a = ord.order;
    const double mu = ord.temper_rate;
    const double mh = mu * grid.h;
    const double g = std::tgamma(a);
    const double nr = 1.0 / (std::pow(mu, a) * g);
    const double nt = 1.0 / (std::pow(mu, a + 1.0) * g);

    rect_.resize(L + 1);
    trap_.resize(L + 1);
    trapt_.resize(L + 1);
    for (int k = 0; k <= L; ++k) {
        const CellIntegrals c = (k == 0) ? first_cell(mh, a) : cell_integrals(k * mh, (k + 1) * mh, a, k);
        rect_[k] = c.r * nr;
        trap_[k] = c.lo * nt;
        trapt_[k] = c.hi * nt;
    }

    const double e = std::exp(-mh);
    const double th = grid.theta;
    const double tw = (1.0 - th) / grid.h;
    kernel_.resize(L + 1);
    first_.resize(L + 1);
    std::vector<double> a_k(L + 1), c_k(L + 1);
    for (int k = 0; k <= L; ++k) {
        c_k[k] = th * (rect(k) + e * rect_tilde(k)) + tw * (trap_tilde(k) - e * trap_tilde_U(k));
        a_k[k] = tw * (trap(k) - e * trap_U(k));
    }
    kernel_[0] = c_k[0];
    for (int l = 1; l <= L; ++l) kernel_[l] = c_k[l] + a_k[l - 1];
    first_ = a_k;
    kernel_rev_.resize(L + 1);
    for (int l = 0; l <= L; ++l) kernel_rev_[L - l] = kernel_[l];
}

double WeightTable::explicit_sum(const double* y, int i) const {
    const int L = max_lag();
    if (i < 0 || i > L) throw DomainError("history sum: step index outside weight table");
    const double* base = kernel_rev_.data() + (L - i - 1);
    double s = first_[i] * y[0];
    for (int m = 1; m <= i; ++m) s += base[m] * y[m];
    return s;
}

double WeightTable::bracket(const double* y, int i) const {
    return explicit_sum(y, i) + implicit_coef() * y[i + 1];
}

RectangleRow rectangle_weights(int i, const GridSpec& grid, const TemperedOrder& ord) {
    if (i < 0) throw DomainError("rectangle_weights: negative step index");
    GridSpec g = grid;
    g.n_steps = std::max(1, i);
    const WeightTable t(ord, g);
    RectangleRow row;
    row.omega.resize(i + 1);
    row.omega_tilde.resize(i + 1);
    for (int j = 0; j <= i; ++j) {
        row.omega[j] = t.rect(i - j);
        row.omega_tilde[j] = t.rect_tilde(i - j);
    }
    return row;
}

TrapezoidRow trapezoid_weights(int i, const GridSpec& grid, const TemperedOrder& ord) {
    if (i < 0) throw DomainError("trapezoid_weights: negative step index");
    GridSpec g = grid;
    g.n_steps = std::max(1, i);
    const WeightTable t(ord, g);
    TrapezoidRow row;
    for (auto* v : {&row.omega, &row.U, &row.omega_tilde, &row.U_tilde}) v->resize(i + 1);
    for (int j = 0; j <= i; ++j) {
        const int k = i - j;
        row.omega[j] = t.trap(k);
        row.U[j] = t.trap_U(k);
        row.omega_tilde[j] = t.trap_tilde(k);
        row.U_tilde[j] = t.trap_tilde_U(k);
    }
    return row;
}

double tempered_history_sum(std::span<const double> hist, int i, const WeightTable& table) {
    if (i < 0 || hist.size() != static_cast<std::size_t>(i) + 2)
        throw DomainError("tempered_history_sum: history must hold y_0..y_{i+1}");
    return table.bracket(hist.data(), i);
}

double tempered_deriv_const_oracle(const TemperedOrder& ord, double t) {
    ord.validate();
    if (!(t > 0.0)) throw DomainError("tempered_deriv_const_oracle: t must be positive");
    const double a = ord.order;
    const double x = ord.temper_rate * t;
    return std::pow(ord.temper_rate, 1.0 - a) *
           (regularized_lower_gamma(x, a) + std::exp((a - 1.0) * std::log(x) - x) / std::tgamma(a));
}

double asymptotic_rate(const TemperedOrder& ord, double y) {
    if (!(y > 0.0 && y <= 1.0)) throw DomainError("asymptotic_rate: exponent must lie in (0,1]");
    if (!(ord.temper_rate > 0.0)) throw DomainError("asymptotic_rate: rate must be positive");
    return std::pow(ord.temper_rate, y);
}

}  // namespace tfd
