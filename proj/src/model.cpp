#include "tfd/model.hpp"

#include <cmath>
#include <string>

#include "tfd/errors.hpp"

namespace tfd {
namespace {

using ld = long double;

struct Rates {
    ld L1, L3, K, Pi, muH, muV, N;
};

Rates rates_ld(const ModelParams& p) {
    Rates r;
    r.N = p.N_H;
    r.muH = p.mu_H;
    r.muV = p.mu_V;
    r.Pi = static_cast<ld>(p.delta) * p.N_H;
    r.L1 = std::pow(static_cast<ld>(p.b), static_cast<ld>(p.alpha)) * p.beta_VH *
           std::pow(static_cast<ld>(p.mu_V), 1.0L - p.alpha) / r.N;
    r.L3 = std::pow(static_cast<ld>(p.b), static_cast<ld>(p.p)) * p.beta_HV *
           std::pow(static_cast<ld>(p.mu_H), 1.0L - p.p) / (r.N * std::pow(static_cast<ld>(p.C), static_cast<ld>(p.p)));
    r.K = r.muH + std::pow(static_cast<ld>(p.mu_H), 1.0L - p.beta) / std::pow(static_cast<ld>(p.C), static_cast<ld>(p.beta));
    return r;
}

std::array<ld, 3> rhs_ld(const Rates& r, const std::array<ld, 3>& s) {
    const ld S = s[0], I = s[1], V = s[2];
    return {r.muH * r.N - r.L1 * S * V - r.muH * S,
            r.L1 * S * V - r.K * I,
            r.L3 * (r.Pi / r.muV - V) * I - r.muV * V};
}

void require(bool ok, const char* what) {
    if (!ok) throw DomainError(std::string("invalid parameters: ") + what);
}

}  // namespace

double ModelParams::lambda1() const {
    return std::pow(b, alpha) * beta_VH * std::pow(mu_V, 1.0 - alpha) / N_H;
}

double ModelParams::lambda3() const {
    return std::pow(b, p) * beta_HV * std::pow(mu_H, 1.0 - p) / (N_H * std::pow(C, p));
}

double ModelParams::recovery_rate() const {
    return std::pow(mu_H, 1.0 - beta) / std::pow(C, beta);
}

void ModelParams::validate() const {
    auto pos = [](double v) { return v > 0.0 && std::isfinite(v); };
    require(pos(N_H), "N_H must be positive");
    require(pos(mu_H), "mu_H must be positive");
    require(pos(mu_V), "mu_V must be positive");
    require(pos(b), "b must be positive");
    require(pos(C), "C must be positive");
    require(pos(delta), "delta must be positive");
    require(alpha > 0.0 && alpha <= 1.0, "alpha must lie in (0,1]");
    require(beta > 0.0 && beta <= p && p <= 1.0, "orders must satisfy 0 < beta <= p <= 1");
    require(beta_VH > 0.0 && beta_VH <= 1.0, "beta_VH must lie in (0,1]");
    require(beta_HV > 0.0 && beta_HV <= 1.0, "beta_HV must lie in (0,1]");
}

bool ModelParams::within_biological_ranges() const {
    return b >= 1.7 && b <= 7.0 && mu_V >= 0.14 && mu_V <= 1.75 && delta >= 1.0 && delta <= 5.0;
}

ModelParams fitted_params() { return ModelParams{}; }

double r0(const ModelParams& p) {
    p.validate();
    const double num = p.Pi_V() * std::pow(p.b, p.alpha + p.p) * p.beta_VH * p.beta_HV * std::pow(p.C, p.beta);
    const double den = p.N_H * std::pow(p.C, p.p) * std::pow(p.mu_V, 1.0 + p.alpha) * std::pow(p.mu_H, p.p - p.beta) *
                       (std::pow(p.mu_H, p.beta) * std::pow(p.C, p.beta) + 1.0);
    return std::sqrt(num / den);
}

NgmPair ngm(const ModelParams& p) {
    p.validate();
    NgmPair g;
    g.F << 0.0, p.lambda1() * p.N_H, p.lambda3() * p.Pi_V() / p.mu_V, 0.0;
    g.V << p.K(), 0.0, 0.0, p.mu_V;
    g.FVinv = g.F * g.V.inverse();
    return g;
}

double spectral_radius(const Eigen::Matrix2d& m) {
    const Eigen::EigenSolver<Eigen::Matrix2d> es(m);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

long double steady_state_residual(const ModelParams& p, const std::array<long double, 3>& s) {
    const auto f = rhs_ld(rates_ld(p), s);
    return std::max({std::fabs(f[0]), std::fabs(f[1]), std::fabs(f[2])});
}

EquilibriumReport disease_free_equilibrium(const ModelParams& p) {
    EquilibriumReport rep;
    rep.kind = EquilibriumReport::Kind::DiseaseFree;
    rep.state = {p.N_H, 0.0, 0.0};
    rep.state_ld = {static_cast<ld>(p.N_H), 0.0L, 0.0L};
    rep.r0 = r0(p);
    rep.residual = static_cast<double>(steady_state_residual(p, rep.state_ld));
    return rep;
}

std::optional<EquilibriumReport> endemic_equilibrium(const ModelParams& p) {
    const double R0 = r0(p);
    if (!(R0 > 1.0)) return std::nullopt;
    const Rates r = rates_ld(p);
    const ld R2 = static_cast<ld>(R0) * R0;
    const ld A = r.L1 + r.L3 * r.L1 * r.muH * r.N / (r.muV * r.K);
    std::array<ld, 3> s;
    s[2] = r.muH * (R2 - 1.0L) / A;
    s[0] = r.muH * r.N / (r.L1 * s[2] + r.muH);
    s[1] = r.L1 * s[0] * s[2] / r.K;

    // Two Newton polishes on the reduced system remove the rounding carried in from r0.
    for (int it = 0; it < 2; ++it) {
        const auto f = rhs_ld(r, s);
        const ld S = s[0], I = s[1], V = s[2];
        ld J[3][3] = {{-r.L1 * V - r.muH, 0.0L, -r.L1 * S},
                      {r.L1 * V, -r.K, r.L1 * S},
                      {0.0L, r.L3 * (r.Pi / r.muV - V), -r.L3 * I - r.muV}};
        // Cramer's rule on J dx = -f
        auto det3 = [](ld m[3][3]) {
            return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                   m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                   m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        };
        const ld D = det3(J);
        if (D == 0.0L) break;
        std::array<ld, 3> dx;
        for (int c = 0; c < 3; ++c) {
            ld M[3][3];
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) M[i][j] = (j == c) ? -f[i] : J[i][j];
            dx[c] = det3(M) / D;
        }
        for (int c = 0; c < 3; ++c) s[c] += dx[c];
    }

    EquilibriumReport rep;
    rep.kind = EquilibriumReport::Kind::Endemic;
    rep.state_ld = s;
    rep.state = {static_cast<double>(s[0]), static_cast<double>(s[1]), static_cast<double>(s[2])};
    rep.r0 = R0;
    rep.residual = static_cast<double>(steady_state_residual(p, s));
    rep.routh = endemic_stability(p);
    return rep;
}

RouthRecord endemic_stability(const ModelParams& p) {
    const double R0 = r0(p);
    if (!(R0 > 1.0)) throw DomainError("endemic_stability requires r0 > 1");
    const Rates r = rates_ld(p);
    const ld R2 = static_cast<ld>(R0) * R0;
    const ld A = r.L1 + r.L3 * r.L1 * r.muH * r.N / (r.muV * r.K);
    const ld V = r.muH * (R2 - 1.0L) / A;
    const ld S = r.muH * r.N / (r.L1 * V + r.muH);
    const ld I = r.L1 * S * V / r.K;
    const ld x = r.muH + r.L1 * V;
    const ld y = r.muV + r.L3 * I;
    RouthRecord rec;
    rec.A1 = static_cast<double>(x + r.K + y);
    rec.B1 = static_cast<double>(r.K * (x + r.L3 * I) + x * y);
    rec.C1 = static_cast<double>(r.K * (r.muV * r.L1 * V + x * r.L3 * I));
    rec.A1B1_minus_C1 = static_cast<double>((x + r.K + y) * (r.K * (x + r.L3 * I) + x * y) -
                                            r.K * (r.muV * r.L1 * V + x * r.L3 * I));
    rec.stable = rec.A1 > 0 && rec.B1 > 0 && rec.C1 > 0 && rec.A1B1_minus_C1 > 0;
    return rec;
}

Reduced classical_limit_rhs(const ModelParams& p, const Reduced& s) {
    const double L1 = p.lambda1(), L3 = p.lambda3(), K = p.K();
    const double S = s[0], I = s[1], V = s[2];
    return {p.mu_H * p.N_H - L1 * S * V - p.mu_H * S,
            L1 * S * V - K * I,
            L3 * (p.vector_capacity() - V) * I - p.mu_V * V};
}

Eigen::Matrix3d reduced_jacobian(const ModelParams& p, const Reduced& s) {
    const double L1 = p.lambda1(), L3 = p.lambda3(), K = p.K();
    const double S = s[0], I = s[1], V = s[2];
    Eigen::Matrix3d J;
    J << -L1 * V - p.mu_H, 0.0, -L1 * S,
         L1 * V, -K, L1 * S,
         0.0, L3 * (p.vector_capacity() - V), -L3 * I - p.mu_V;
    return J;
}

}  // namespace tfd
