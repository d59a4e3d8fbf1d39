#pragma once

namespace tfd {

struct EvalPolicy {
    double rel_tol = 1e-12;
    int max_terms = 10000;
    // |z| above which the Mittag-Leffler function is taken from its asymptotic expansion.
    double series_asymptotic_switch = 60.0;
};

// gamma(t, y) = int_0^t u^(y-1) e^(-u) du
double lower_incomplete_gamma(double t, double y, const EvalPolicy& pol = {});

// P(t, y) = gamma(t, y) / Gamma(y)
double regularized_lower_gamma(double t, double y, const EvalPolicy& pol = {});

// E_{r,l}(z) = sum_k z^k / Gamma(r k + l), real z.
double mittag_leffler(double r, double l, double z, const EvalPolicy& pol = {});

// Survival of the power-law recovery time: E_{beta,1}(-(t/C)^beta).
double recovery_survival(double t, double beta, double C, const EvalPolicy& pol = {});

// Density of the recovery time: (t^(beta-1)/C^beta) E_{beta,beta}(-(t/C)^beta).
double recovery_density(double t, double beta, double C, const EvalPolicy& pol = {});

// int_{t1}^{t2} (t-s)^(y-1) e^(-l (t-s)) ds for t1 <= t2 <= t, via incomplete gamma.
double tempered_kernel_integral(double t, double t1, double t2, double y, double l,
                                const EvalPolicy& pol = {});

}  // namespace tfd
