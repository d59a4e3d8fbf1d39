#include "tfd/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "tfd/calibrate.hpp"
#include "tfd/errors.hpp"
#include "tfd/parallel.hpp"

namespace tfd {

const std::array<const char*, kNumGsa> kGsaNames{"alpha", "beta", "b", "beta_HV", "beta_VH", "delta", "mu_V"};

GsaBounds GsaBounds::defaults() {
    GsaBounds g;
    g.lo = {0.01, 0.01, 1.7, 0.001, 0.001, 1.0, 0.14};
    g.hi = {1.0, 1.0, 7.0, 1.0, 1.0, 5.0, 1.75};
    return g;
}

void GsaBounds::validate() const {
    for (int k = 0; k < kNumGsa; ++k)
        if (!(lo[k] < hi[k]) || !std::isfinite(lo[k]) || !std::isfinite(hi[k]))
            throw ConfigError(std::string("degenerate sensitivity bounds for ") + kGsaNames[k]);
}

SampleMatrix gsa_sample(const GsaBounds& bounds, int n, std::uint64_t seed) {
    bounds.validate();
    std::mt19937_64 rng(seed);
    const auto m = lhs_matrix({bounds.lo.begin(), bounds.lo.end()}, {bounds.hi.begin(), bounds.hi.end()}, n, rng);
    SampleMatrix s;
    s.bounds = bounds;
    s.rows.resize(n);
    for (int i = 0; i < n; ++i) std::copy(m[i].begin(), m[i].end(), s.rows[i].begin());
    return s;
}

ModelParams apply_row(const GsaRow& r, const ModelParams& base) {
    ModelParams p = base;
    p.alpha = r[gAlpha];
    p.beta = p.p = r[gBeta];
    p.b = r[gB];
    p.beta_HV = r[gBetaHV];
    p.beta_VH = r[gBetaVH];
    p.delta = r[gDelta];
    p.mu_V = r[gMuV];
    return p;
}

double response_r0(const GsaRow& row, const ModelParams& base) { return r0(apply_row(row, base)); }

double response_total_cases(const GsaRow& row, const ModelParams& base, const StateVector& init, double h,
                            double t_max) {
    const ModelParams p = apply_row(row, base);
    return cumulative_cases(simulate(p, init, make_grid(h, t_max)));
}

std::vector<double> average_ranks(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return x[a] < x[b]; });
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
        const double avg = 0.5 * (i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

std::vector<PrccColumn> prcc(const std::vector<std::vector<double>>& X, const std::vector<double>& y) {
    const int n = static_cast<int>(y.size());
    if (static_cast<int>(X.size()) != n) throw DomainError("prcc: X and y differ in row count");
    if (n == 0) throw DomainError("prcc: no samples");
    const int K = static_cast<int>(X[0].size());
    for (const auto& row : X)
        if (static_cast<int>(row.size()) != K) throw DomainError("prcc: ragged sample matrix");
    const int k_cond = K - 1;
    const int df = n - 2 - k_cond;
    if (df < 1) throw DomainError("prcc: too few samples for the number of parameters");

    Eigen::MatrixXd R(n, K);
    std::vector<bool> constant(K);
    for (int j = 0; j < K; ++j) {
        std::vector<double> col(n);
        for (int i = 0; i < n; ++i) col[i] = X[i][j];
        const auto rk = average_ranks(col);
        for (int i = 0; i < n; ++i) R(i, j) = rk[i];
        constant[j] = std::all_of(col.begin(), col.end(), [&](double v) { return v == col[0]; });
    }
    const auto ry_v = average_ranks(y);
    const Eigen::VectorXd ry = Eigen::Map<const Eigen::VectorXd>(ry_v.data(), n);
    const bool y_constant = std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });

    const boost::math::students_t tdist(df);
    std::vector<PrccColumn> out(K);
    for (int j = 0; j < K; ++j) {
        if (constant[j] || y_constant) continue;
        Eigen::MatrixXd Z(n, K);
        Z.col(0).setOnes();
        for (int c = 0, q = 1; c < K; ++c)
            if (c != j) Z.col(q++) = R.col(c);
        const auto qr = Z.colPivHouseholderQr();
        const Eigen::VectorXd ex = R.col(j) - Z * qr.solve(R.col(j));
        const Eigen::VectorXd ey = ry - Z * qr.solve(ry);
        const double den = std::sqrt(ex.squaredNorm() * ey.squaredNorm());
        if (!(den > 0.0)) continue;
        const double r = std::clamp(ex.dot(ey) / den, -1.0, 1.0);
        out[j].prcc = r;
        out[j].defined = true;
        if (1.0 - r * r <= 0.0) {
            out[j].p_value = 0.0;
        } else {
            const double t = r * std::sqrt(df / (1.0 - r * r));
            out[j].p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(tdist, std::abs(t))));
        }
    }
    return out;
}

const PrccEntry& PrccReport::find(const std::string& parameter, const std::string& response) const {
    for (const auto& e : entries)
        if (e.parameter == parameter && e.response == response) return e;
    throw DomainError("no PRCC entry for " + parameter + "/" + response);
}

namespace {

void add_response(PrccReport& rep, const std::string& name, const SampleMatrix& s, const std::vector<double>& y,
                  int& dropped) {
    std::vector<std::vector<double>> X;
    std::vector<double> yy;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!std::isfinite(y[i])) continue;
        X.emplace_back(s.rows[i].begin(), s.rows[i].end());
        yy.push_back(y[i]);
    }
    dropped = static_cast<int>(y.size() - yy.size());
    const auto cols = prcc(X, yy);
    for (int k = 0; k < kNumGsa; ++k) {
        PrccEntry e;
        e.parameter = kGsaNames[k];
        e.response = name;
        e.prcc = cols[k].defined ? cols[k].prcc : std::numeric_limits<double>::quiet_NaN();
        e.p_value = cols[k].defined ? cols[k].p_value : std::numeric_limits<double>::quiet_NaN();
        e.defined = cols[k].defined;
        e.significant = cols[k].defined && cols[k].p_value < 0.01;
        e.n_effective = static_cast<int>(yy.size());
        rep.entries.push_back(e);
    }
}

}  // namespace

PrccReport run_gsa(const GsaBounds& bounds, const ModelParams& base, const StateVector& init, const GsaConfig& cfg) {
    if (cfg.n < 1) throw ConfigError("gsa: n must be >= 1");
    const SampleMatrix s = gsa_sample(bounds, cfg.n, cfg.seed);
    std::vector<double> y_r0(cfg.n), y_cases(cfg.n, std::numeric_limits<double>::quiet_NaN());
    parallel_for(cfg.n, cfg.workers, [&](int i) {
        try {
            y_r0[i] = response_r0(s.rows[i], base);
        } catch (const Error&) {
            y_r0[i] = std::numeric_limits<double>::quiet_NaN();
        }
        if (!cfg.total_cases) return;
        try {
            y_cases[i] = response_total_cases(s.rows[i], base, init, cfg.h, cfg.t_max);
        } catch (const Error&) {
            y_cases[i] = std::numeric_limits<double>::quiet_NaN();
        }
    });
    PrccReport rep;
    rep.n_samples = cfg.n;
    add_response(rep, "r0", s, y_r0, rep.dropped_r0);
    if (cfg.total_cases) add_response(rep, "total_cases", s, y_cases, rep.dropped_cases);
    return rep;
}

void write_prcc_csv(const std::string& path, const PrccReport& rep) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "parameter,response,prcc,p_value,n_effective\n";
    out.precision(12);
    for (const auto& e : rep.entries)
        out << e.parameter << ',' << e.response << ',' << e.prcc << ',' << e.p_value << ',' << e.n_effective << '\n';
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace tfd
