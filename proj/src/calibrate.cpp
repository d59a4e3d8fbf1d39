#include "tfd/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>
#include <json.hpp>

#include "tfd/errors.hpp"
#include "tfd/parallel.hpp"

namespace tfd {

const std::array<const char*, kNumFree> kFreeNames{"alpha", "beta", "beta_VH", "beta_HV", "b",   "delta",
                                                   "mu_V",  "S_H0", "I_H0",    "S_V0",    "I_V0"};

void ObservedSeries::validate() const {
    if (week.size() != cases.size()) throw DomainError("observed series: week and case columns differ in length");
    if (week.empty()) throw DomainError("observed series is empty");
    for (std::size_t j = 0; j < week.size(); ++j) {
        if (week[j] < 1) throw DomainError("observed series: week indices start at 1");
        if (j > 0 && week[j] <= week[j - 1]) throw DomainError("observed series: week indices must increase");
        if (!(cases[j] >= 0.0) || !std::isfinite(cases[j])) throw DomainError("observed series: cases must be >= 0");
    }
}

ObservedSeries read_observed_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    ObservedSeries s;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (lineno == 1 && line.find_first_of("0123456789") != 0) continue;  // header
        std::stringstream ss(line);
        std::string a, b;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b))
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected week,cases");
        try {
            s.week.push_back(std::stoi(a));
            s.cases.push_back(std::stod(b));
        } catch (const std::exception&) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": unparsable row");
        }
    }
    // sorting by week makes the objective independent of row order
    std::vector<std::size_t> idx(s.week.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto x, auto y) { return s.week[x] < s.week[y]; });
    ObservedSeries out;
    for (auto k : idx) {
        out.week.push_back(s.week[k]);
        out.cases.push_back(s.cases[k]);
    }
    try {
        out.validate();
    } catch (const DomainError& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return out;
}

void write_observed_csv(const std::string& path, const ObservedSeries& s) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "week,cases\n";
    out.precision(12);
    for (std::size_t j = 0; j < s.size(); ++j) out << s.week[j] << ',' << s.cases[j] << '\n';
    if (!out) throw IoError("write failed for " + path);
}

ParamBounds ParamBounds::defaults(double N) {
    ParamBounds b;
    b.lo = {0.01, 0.01, 0.001, 0.001, 1.7, 1.0, 0.14, 0.0, 0.0, 0.0, 0.0};
    b.hi = {1.0, 1.0, 1.0, 1.0, 7.0, 5.0, 1.75, 0.999 * N, 1e-3 * N, 40.0 * N, 0.1 * N};
    return b;
}

bool ParamBounds::contains(const ParamVector& th) const {
    for (int k = 0; k < kNumFree; ++k)
        if (!(th[k] >= lo[k] && th[k] <= hi[k])) return false;
    return true;
}

void ParamBounds::validate() const {
    for (int k = 0; k < kNumFree; ++k)
        if (!(lo[k] < hi[k]) || !std::isfinite(lo[k]) || !std::isfinite(hi[k]))
            throw ConfigError(std::string("degenerate bounds for ") + kFreeNames[k]);
}

ParamVector pack(const ModelParams& p, const StateVector& s) {
    return {p.alpha, p.beta, p.beta_VH, p.beta_HV, p.b, p.delta, p.mu_V, s.S_H, s.I_H, s.S_V, s.I_V};
}

ModelParams unpack_params(const ParamVector& th, const ModelParams& base) {
    ModelParams p = base;
    p.alpha = th[kAlpha];
    p.beta = p.p = th[kBeta];
    p.beta_VH = th[kBetaVH];
    p.beta_HV = th[kBetaHV];
    p.b = th[kB];
    p.delta = th[kDelta];
    p.mu_V = th[kMuV];
    return p;
}

StateVector unpack_state(const ParamVector& th, const ModelParams& base) {
    StateVector s;
    s.S_H = th[kSH0];
    s.I_H = th[kIH0];
    s.R_H = base.N_H - s.S_H - s.I_H;
    s.S_V = th[kSV0];
    s.I_V = th[kIV0];
    // rounding in the subtraction can leave a tiny negative R_H
    if (s.R_H < 0.0 && s.R_H > -1e-9 * base.N_H) s.R_H = 0.0;
    return s;
}

std::vector<double> model_incidence(const ParamVector& th, const FitSetup& setup, int n_weeks) {
    if (n_weeks < 1) throw DomainError("model_incidence: need at least one week");
    const ModelParams p = unpack_params(th, setup.base);
    const StateVector s0 = unpack_state(th, setup.base);
    const GridSpec g = make_grid(setup.h, n_weeks * setup.week_length, setup.theta);
    const Trajectory tr = simulate(p, s0, g, setup.step);
    auto inc = incidence_series(tr, setup.week_length);
    inc.resize(n_weeks);
    return inc;
}

double sse(const ParamVector& th, const ObservedSeries& data, const FitSetup& setup) {
    try {
        const auto inc = model_incidence(th, setup, data.week.back());
        double s = 0.0;
        for (std::size_t j = 0; j < data.size(); ++j) {
            const double r = data.cases[j] - inc[data.week[j] - 1];
            s += r * r;
        }
        return std::isfinite(s) ? s : std::numeric_limits<double>::infinity();
    } catch (const Error&) {
        return std::numeric_limits<double>::infinity();
    }
}

std::vector<std::vector<double>> lhs_matrix(const std::vector<double>& lo, const std::vector<double>& hi, int n,
                                            std::mt19937_64& rng) {
    if (n < 1) throw DomainError("lhs: n must be >= 1");
    if (lo.size() != hi.size()) throw DomainError("lhs: bound vectors differ in length");
    const std::size_t d = lo.size();
    for (std::size_t k = 0; k < d; ++k)
        if (!(lo[k] < hi[k])) throw DomainError("lhs: degenerate bounds in dimension " + std::to_string(k));
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<std::vector<double>> out(n, std::vector<double>(d));
    std::vector<int> perm(n);
    for (std::size_t k = 0; k < d; ++k) {
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        for (int i = 0; i < n; ++i) {
            const double u = (perm[i] + U(rng)) / n;
            out[i][k] = lo[k] + (hi[k] - lo[k]) * u;
        }
    }
    return out;
}

std::vector<ParamVector> lhs_sample(const ParamBounds& b, int n, std::mt19937_64& rng) {
    b.validate();
    const auto m = lhs_matrix({b.lo.begin(), b.lo.end()}, {b.hi.begin(), b.hi.end()}, n, rng);
    std::vector<ParamVector> out(n);
    for (int i = 0; i < n; ++i) std::copy(m[i].begin(), m[i].end(), out[i].begin());
    return out;
}

namespace {

struct NmContext {
    const ObservedSeries* data;
    const ParamBounds* bounds;
    const FitSetup* setup;
    int evals = 0;
    double best = std::numeric_limits<double>::infinity();
    ParamVector best_theta{};
};

ParamVector from_free(const gsl_vector* u, const ParamBounds& b) {
    ParamVector th;
    for (int k = 0; k < kNumFree; ++k) {
        const double s = 1.0 / (1.0 + std::exp(-gsl_vector_get(u, k)));
        th[k] = b.lo[k] + (b.hi[k] - b.lo[k]) * s;
    }
    return th;
}

double nm_objective(const gsl_vector* u, void* vp) {
    auto* c = static_cast<NmContext*>(vp);
    const ParamVector th = from_free(u, *c->bounds);
    const double v = sse(th, *c->data, *c->setup);
    ++c->evals;
    if (v < c->best) {
        c->best = v;
        c->best_theta = th;
    }
    return std::isfinite(v) ? v : 1e300;
}

}  // namespace

FitResult local_fit(const ParamVector& start, const ObservedSeries& data, const ParamBounds& bounds,
                    const FitSetup& setup, const FitConfig& cfg) {
    bounds.validate();
    if (!bounds.contains(start)) throw DomainError("local_fit: start point violates the bounds");
    NmContext ctx{&data, &bounds, &setup};
    FitResult res;
    res.n_starts = 1;
    res.best_start_sse = sse(start, data, setup);
    res.start_sse = {res.best_start_sse};
    ctx.best = res.best_start_sse;
    ctx.best_theta = start;

    gsl_set_error_handler_off();
    gsl_multimin_function fn{&nm_objective, kNumFree, &ctx};
    gsl_vector* x = gsl_vector_alloc(kNumFree);
    gsl_vector* step = gsl_vector_alloc(kNumFree);
    gsl_multimin_fminimizer* mm = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, kNumFree);

    bool converged = false;
    ParamVector origin = start;
    // one restart from the best point guards against simplex collapse
    for (int round = 0; round < 2 && ctx.evals < cfg.max_evals; ++round) {
        for (int k = 0; k < kNumFree; ++k) {
            const double s = std::clamp((origin[k] - bounds.lo[k]) / (bounds.hi[k] - bounds.lo[k]), 1e-6, 1.0 - 1e-6);
            gsl_vector_set(x, k, std::log(s / (1.0 - s)));
        }
        gsl_vector_set_all(step, cfg.initial_step);
        gsl_multimin_fminimizer_set(mm, &fn, x, step);
        converged = false;
        while (ctx.evals < cfg.max_evals) {
            if (gsl_multimin_fminimizer_iterate(mm) != GSL_SUCCESS) break;
            if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(mm), cfg.size_tol) == GSL_SUCCESS) {
                converged = true;
                break;
            }
        }
        origin = ctx.best_theta;
    }
    gsl_multimin_fminimizer_free(mm);
    gsl_vector_free(step);
    gsl_vector_free(x);

    res.theta_hat = ctx.best_theta;
    res.sse = ctx.best;
    res.converged = converged && std::isfinite(ctx.best);
    res.final_sse = {res.sse};
    return res;
}

FitResult least_squares_fit(const ObservedSeries& data, const ParamBounds& bounds, const FitSetup& setup,
                            const FitConfig& cfg) {
    data.validate();
    bounds.validate();
    if (cfg.n_starts < 1) throw ConfigError("least_squares_fit: n_starts must be >= 1");
    std::mt19937_64 rng(cfg.seed);
    const auto starts = lhs_sample(bounds, cfg.n_starts, rng);
    std::vector<FitResult> runs(starts.size());
    parallel_for(static_cast<int>(starts.size()), cfg.workers,
                 [&](int i) { runs[i] = local_fit(starts[i], data, bounds, setup, cfg); });

    FitResult best;
    best.sse = std::numeric_limits<double>::infinity();
    best.best_start_sse = std::numeric_limits<double>::infinity();
    best.n_starts = cfg.n_starts;
    for (const auto& r : runs) {
        best.start_sse.push_back(r.start_sse.front());
        best.final_sse.push_back(r.sse);
        best.best_start_sse = std::min(best.best_start_sse, r.start_sse.front());
        if (r.sse < best.sse) {
            best.sse = r.sse;
            best.theta_hat = r.theta_hat;
            best.converged = r.converged;
        }
    }
    if (!std::isfinite(best.sse)) throw ConvergenceError("least_squares_fit: every start failed");
    return best;
}

// ---------------------------------------------------------------------------------------------------------
// DRAM

double PosteriorChain::quantile(int comp, double q) const {
    std::vector<double> v;
    for (std::size_t i = burn_in; i < samples.size(); ++i) v.push_back(samples[i][comp]);
    if (v.empty()) throw DomainError("chain has no post-burn-in samples");
    std::sort(v.begin(), v.end());
    const double pos = q * (v.size() - 1);
    const std::size_t k = static_cast<std::size_t>(std::floor(pos));
    const double f = pos - k;
    return k + 1 < v.size() ? v[k] * (1.0 - f) + v[k + 1] * f : v[k];
}

double PosteriorChain::mean(int comp) const {
    double s = 0.0;
    int n = 0;
    for (std::size_t i = burn_in; i < samples.size(); ++i, ++n) s += samples[i][comp];
    if (n == 0) throw DomainError("chain has no post-burn-in samples");
    return s / n;
}

namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Cholesky factor with diagonal jitter until it succeeds.
Mat robust_chol(Mat C) {
    const int d = static_cast<int>(C.rows());
    double jitter = 0.0;
    const double base = std::max(1e-14, C.diagonal().cwiseAbs().maxCoeff() * 1e-12);
    for (int t = 0; t < 40; ++t) {
        Eigen::LLT<Mat> llt(C + jitter * Mat::Identity(d, d));
        if (llt.info() == Eigen::Success) return llt.matrixL();
        jitter = jitter == 0.0 ? base : jitter * 10.0;
    }
    throw NumericalError("proposal covariance is not positive definite");
}

}  // namespace

PosteriorChain dram_sample(const SumOfSquares& ss, const std::vector<double>& lo, const std::vector<double>& hi,
                           const std::vector<double>& x0, int n_obs, const DramConfig& cfg,
                           const std::vector<double>* init_cov) {
    const int d = static_cast<int>(x0.size());
    if (d < 1 || static_cast<int>(lo.size()) != d || static_cast<int>(hi.size()) != d)
        throw DomainError("dram: dimension mismatch");
    if (cfg.chain_len < 2) throw ConfigError("dram: chain_len must be >= 2");
    if (!(cfg.burn_in_frac >= 0.0 && cfg.burn_in_frac < 1.0)) throw ConfigError("dram: burn_in_frac in [0,1)");
    if (cfg.adapt_interval < 1) throw ConfigError("dram: adapt_interval must be >= 1");
    for (int k = 0; k < d; ++k)
        if (!(x0[k] >= lo[k] && x0[k] <= hi[k])) throw DomainError("dram: theta0 outside bounds");

    Vec span(d);
    for (int k = 0; k < d; ++k) span(k) = hi[k] - lo[k];
    auto to_param = [&](const Vec& z) {
        std::vector<double> x(d);
        for (int k = 0; k < d; ++k) x[k] = lo[k] + span(k) * z(k);
        return x;
    };
    auto inside = [&](const Vec& z) { return (z.array() >= 0.0).all() && (z.array() <= 1.0).all(); };

    Vec z(d);
    for (int k = 0; k < d; ++k) z(k) = (x0[k] - lo[k]) / span(k);
    double ss_x = ss(x0);
    if (!std::isfinite(ss_x)) throw DomainError("dram: objective is not finite at theta0");

    const double N0 = cfg.sigma2_prior_n;
    const double S20 = std::max(ss_x / std::max(1, n_obs - d), 1e-300);
    double sigma2 = S20;

    Mat C(d, d);
    if (init_cov) {
        if (static_cast<int>(init_cov->size()) != d * d) throw DomainError("dram: init_cov must be d x d");
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) C(i, j) = (*init_cov)[i * d + j] / (span(i) * span(j));
    } else {
        C = Mat::Identity(d, d) * (cfg.initial_sd * cfg.initial_sd);
    }
    Mat L = robust_chol(C);
    const double sd_scale = 2.4 * 2.4 / d;

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> Z(0.0, 1.0);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    auto draw = [&] {
        Vec e(d);
        for (int k = 0; k < d; ++k) e(k) = Z(rng);
        return e;
    };
    auto eval = [&](const Vec& y) {
        if (!inside(y)) return std::numeric_limits<double>::infinity();
        const double v = ss(to_param(y));
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    PosteriorChain ch;
    ch.dim = d;
    ch.burn_in = static_cast<int>(std::floor(cfg.burn_in_frac * cfg.chain_len));
    ch.samples.reserve(cfg.chain_len);
    auto record = [&] {
        ch.samples.push_back(to_param(z));
        ch.sse.push_back(ss_x);
        ch.sigma2.push_back(sigma2);
        ch.log_post.push_back(-0.5 * ss_x / sigma2 - 0.5 * n_obs * std::log(2.0 * M_PI * sigma2));
    };
    record();

    // running mean/covariance of the chain in unit coordinates
    Vec mean = z;
    Mat M2 = Mat::Zero(d, d);
    long count = 1;
    int accepted = 0;

    for (int it = 1; it < cfg.chain_len; ++it) {
        bool acc = false;
        const Vec y1 = z + L * draw();
        const double ss1 = eval(y1);
        const double a1 = std::isfinite(ss1) ? std::min(1.0, std::exp(-0.5 * (ss1 - ss_x) / sigma2)) : 0.0;
        if (U(rng) < a1) {
            z = y1;
            ss_x = ss1;
            acc = true;
        } else {
            const Vec y2 = z + cfg.dr_scale * (L * draw());
            const double ss2 = eval(y2);
            if (std::isfinite(ss2)) {
                const double a1_rev = std::isfinite(ss1) ? std::min(1.0, std::exp(-0.5 * (ss1 - ss2) / sigma2)) : 0.0;
                if (a1_rev < 1.0) {
                    const auto Lsolve = L.triangularView<Eigen::Lower>();
                    const double q_num = Lsolve.solve(Vec(y1 - y2)).squaredNorm();
                    const double q_den = Lsolve.solve(Vec(y1 - z)).squaredNorm();
                    const double log_a2 = -0.5 * (ss2 - ss_x) / sigma2 - 0.5 * (q_num - q_den) +
                                          std::log1p(-a1_rev) - std::log1p(-a1);
                    if (std::log(U(rng)) < log_a2) {
                        z = y2;
                        ss_x = ss2;
                        acc = true;
                    }
                }
            }
        }
        if (acc) ++accepted;

        // conjugate inverse-gamma update of the error variance
        std::gamma_distribution<double> G(0.5 * (N0 + n_obs), 2.0 / (N0 * S20 + ss_x));
        sigma2 = 1.0 / G(rng);

        ++count;
        const Vec delta = z - mean;
        mean += delta / static_cast<double>(count);
        M2 += delta * (z - mean).transpose();

        // the chain covariance is singular until it has moved in every direction
        if (it % cfg.adapt_interval == 0 && accepted > d) {
            const Mat cov = M2 / static_cast<double>(count - 1);
            L = robust_chol(sd_scale * (cov + cfg.adapt_eps * Mat::Identity(d, d)));
        }
        record();
    }
    ch.acceptance_rate = static_cast<double>(accepted) / (cfg.chain_len - 1);

    std::vector<std::vector<double>> cols(d);
    for (int k = 0; k < d; ++k)
        for (std::size_t i = ch.burn_in; i < ch.samples.size(); ++i) cols[k].push_back(ch.samples[i][k]);
    if (cols[0].size() >= 100) ch.geweke_z = geweke_z(cols);
    return ch;
}

PosteriorChain dram_mcmc(const ObservedSeries& data, const ParamVector& theta0, const ParamBounds& bounds,
                         const FitSetup& setup, const DramConfig& cfg) {
    data.validate();
    bounds.validate();
    if (!bounds.contains(theta0)) throw DomainError("dram_mcmc: theta0 outside bounds");
    const int d = kNumFree;
    const int n = static_cast<int>(data.size());
    auto ss = [&](const std::vector<double>& x) {
        ParamVector th;
        std::copy(x.begin(), x.end(), th.begin());
        return sse(th, data, setup);
    };
    const std::vector<double> lo(bounds.lo.begin(), bounds.lo.end()), hi(bounds.hi.begin(), bounds.hi.end());
    const std::vector<double> x0(theta0.begin(), theta0.end());

    std::vector<double> cov;
    if (cfg.initial_cov_from_jacobian) {
        // residual Jacobian in unit coordinates by one-sided differences pointing into the box
        const int W = data.week.back();
        auto resid = [&](const ParamVector& th, Vec& r) {
            const auto inc = model_incidence(th, setup, W);
            for (int j = 0; j < n; ++j) r(j) = inc[data.week[j] - 1] - data.cases[j];
        };
        try {
            Vec r0(n), r1(n);
            resid(theta0, r0);
            Mat J(n, d);
            for (int k = 0; k < d; ++k) {
                const double span = bounds.hi[k] - bounds.lo[k];
                const double u = (theta0[k] - bounds.lo[k]) / span;
                const double du = (u + 1e-4 <= 1.0) ? 1e-4 : -1e-4;
                ParamVector th = theta0;
                th[k] = bounds.lo[k] + span * (u + du);
                resid(th, r1);
                J.col(k) = (r1 - r0) / du;
            }
            const double s2 = std::max(r0.squaredNorm() / std::max(1, n - d), 1e-300);
            Eigen::SelfAdjointEigenSolver<Mat> es(J.transpose() * J);
            Vec ev = es.eigenvalues();
            // cap each eigendirection's proposal sd at a quarter of the box
            const double lam_floor = s2 / (0.25 * 0.25);
            for (int k = 0; k < d; ++k) ev(k) = 1.0 / std::max(ev(k), lam_floor);
            const Mat Cz = (2.4 * 2.4 / d) * s2 * es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
            cov.resize(d * d);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    cov[i * d + j] = Cz(i, j) * (bounds.hi[i] - bounds.lo[i]) * (bounds.hi[j] - bounds.lo[j]);
        } catch (const Error&) {
            cov.clear();
        }
    }
    return dram_sample(ss, lo, hi, x0, n, cfg, cov.empty() ? nullptr : &cov);
}

double spectral_variance0(const double* x, int n) {
    if (n < 2) throw DomainError("spectral variance needs at least two samples");
    double m = 0.0;
    for (int i = 0; i < n; ++i) m += x[i];
    m /= n;
    auto acov = [&](int k) {
        double s = 0.0;
        for (int i = 0; i + k < n; ++i) s += (x[i] - m) * (x[i + k] - m);
        return s / n;
    };
    const int lag = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(n)))));
    double s = acov(0);
    for (int k = 1; k <= std::min(lag, n - 1); ++k) s += 2.0 * (1.0 - static_cast<double>(k) / (lag + 1)) * acov(k);
    return std::max(s, 0.0);
}

double geweke_z(const std::vector<double>& x, double first, double last) {
    const int n = static_cast<int>(x.size());
    if (n < 100) throw DomainError("geweke_z: need at least 100 samples");
    if (!(first > 0.0 && last > 0.0 && first + last <= 1.0)) throw DomainError("geweke_z: bad segment fractions");
    const int na = static_cast<int>(std::floor(first * n));
    const int nb = static_cast<int>(std::floor(last * n));
    const double* a = x.data();
    const double* b = x.data() + (n - nb);
    const double ma = std::accumulate(a, a + na, 0.0) / na;
    const double mb = std::accumulate(b, b + nb, 0.0) / nb;
    const double va = spectral_variance0(a, na) / na;
    const double vb = spectral_variance0(b, nb) / nb;
    const double den = std::sqrt(va + vb);
    if (den == 0.0) return ma == mb ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), ma - mb);
    return (ma - mb) / den;
}

std::vector<double> geweke_z(const std::vector<std::vector<double>>& cols, double first, double last) {
    std::vector<double> z;
    z.reserve(cols.size());
    for (const auto& c : cols) z.push_back(geweke_z(c, first, last));
    return z;
}

ObservedSeries synthetic_data(const ParamVector& th, const FitSetup& setup, int n_weeks, double noise_sd,
                              std::uint64_t seed) {
    if (!(noise_sd >= 0.0)) throw DomainError("synthetic_data: noise_sd must be >= 0");
    const auto inc = model_incidence(th, setup, n_weeks);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N(0.0, 1.0);
    ObservedSeries s;
    for (int j = 0; j < n_weeks; ++j) {
        s.week.push_back(j + 1);
        s.cases.push_back(noise_sd > 0.0 ? std::max(0.0, inc[j] + noise_sd * N(rng)) : inc[j]);
    }
    return s;
}

void write_fit_json(const std::string& path, const FitResult& fit, const PosteriorChain* chain) {
    nlohmann::json j;
    j["sse"] = fit.sse;
    j["n_starts"] = fit.n_starts;
    j["converged"] = fit.converged;
    j["best_start_sse"] = fit.best_start_sse;
    nlohmann::json params = nlohmann::json::object();
    for (int k = 0; k < kNumFree; ++k) {
        nlohmann::json e;
        e["estimate"] = fit.theta_hat[k];
        if (chain && static_cast<int>(chain->samples.size()) > chain->burn_in) {
            e["mean"] = chain->mean(k);
            e["q025"] = chain->quantile(k, 0.025);
            e["q975"] = chain->quantile(k, 0.975);
            if (k < static_cast<int>(chain->geweke_z.size())) e["geweke_z"] = chain->geweke_z[k];
        }
        params[kFreeNames[k]] = e;
    }
    j["parameters"] = params;
    if (chain) {
        j["chain_length"] = chain->samples.size();
        j["burn_in"] = chain->burn_in;
        j["acceptance_rate"] = chain->acceptance_rate;
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed for " + path);
}

void write_chain_csv(const std::string& path, const PosteriorChain& ch) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    for (int k = 0; k < ch.dim; ++k) out << (ch.dim == kNumFree ? kFreeNames[k] : ("x" + std::to_string(k)).c_str()) << ',';
    out << "sse,sigma2,log_post\n";
    out.precision(12);
    for (std::size_t i = 0; i < ch.samples.size(); ++i) {
        for (double v : ch.samples[i]) out << v << ',';
        out << ch.sse[i] << ',' << ch.sigma2[i] << ',' << ch.log_post[i] << '\n';
    }
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace tfd
