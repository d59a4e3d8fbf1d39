#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "tfd/solver.hpp"

namespace tfd {

struct ObservedSeries {
    std::vector<int> week;  // 1-based; week j covers (7(j-1), 7j] days
    std::vector<double> cases;
    std::size_t size() const { return week.size(); }
    void validate() const;
};

ObservedSeries read_observed_csv(const std::string& path);
void write_observed_csv(const std::string& path, const ObservedSeries& s);

// Free components: the orders and rates, then the initial state; R_H(0) = N_H - S_H(0) - I_H(0).
constexpr int kNumFree = 11;
using ParamVector = std::array<double, kNumFree>;
enum FreeIndex { kAlpha, kBeta, kBetaVH, kBetaHV, kB, kDelta, kMuV, kSH0, kIH0, kSV0, kIV0 };
extern const std::array<const char*, kNumFree> kFreeNames;

struct ParamBounds {
    ParamVector lo{}, hi{};
    // Biological ranges for the rates and probabilities; initial states scaled by N_H.
    static ParamBounds defaults(double N_H);
    bool contains(const ParamVector& th) const;
    void validate() const;
};

// Fixed context of a fit: N_H, mu_H and C come from `base`; beta and p are tied.
struct FitSetup {
    ModelParams base;
    double h = 0.2;
    double theta = 0.0;
    double week_length = 7.0;
    StepSolveConfig step;
};

ParamVector pack(const ModelParams& prm, const StateVector& init);
ModelParams unpack_params(const ParamVector& th, const ModelParams& base);
StateVector unpack_state(const ParamVector& th, const ModelParams& base);

// Weekly model incidence for weeks 1..n_weeks.
std::vector<double> model_incidence(const ParamVector& th, const FitSetup& setup, int n_weeks);

// Sum of squared weekly residuals; +inf when the parameters are infeasible or the solver fails.
double sse(const ParamVector& th, const ObservedSeries& data, const FitSetup& setup);

std::vector<ParamVector> lhs_sample(const ParamBounds& bounds, int n, std::mt19937_64& rng);
// Generic n x d Latin hypercube on the box [lo, hi].
std::vector<std::vector<double>> lhs_matrix(const std::vector<double>& lo, const std::vector<double>& hi, int n,
                                            std::mt19937_64& rng);

struct FitConfig {
    int n_starts = 100;
    int max_evals = 3000;      // per local search
    double size_tol = 1e-6;    // simplex size in unit coordinates
    double initial_step = 0.1; // in the unbounded transform
    int workers = 1;
    std::uint64_t seed = 1;
};

struct FitResult {
    ParamVector theta_hat{};
    double sse = 0;
    int n_starts = 0;
    bool converged = false;
    double best_start_sse = 0;   // lowest SSE among the raw LHS starts
    std::vector<double> start_sse, final_sse;
};

// Nelder-Mead from one start point (bounded through a logistic transform).
FitResult local_fit(const ParamVector& start, const ObservedSeries& data, const ParamBounds& bounds,
                    const FitSetup& setup, const FitConfig& cfg);

FitResult least_squares_fit(const ObservedSeries& data, const ParamBounds& bounds, const FitSetup& setup,
                            const FitConfig& cfg);

struct DramConfig {
    int chain_len = 10000;
    double burn_in_frac = 0.2;
    int adapt_interval = 100;  // iterations between covariance updates
    double dr_scale = 0.2;     // second-stage proposal standard deviation factor
    double sigma2_prior_n = 1.0;
    double adapt_eps = 1e-10;
    bool initial_cov_from_jacobian = true;
    double initial_sd = 0.02;  // unit-coordinate proposal sd when no Jacobian is used
    std::uint64_t seed = 1;
};

struct PosteriorChain {
    int dim = 0;
    std::vector<std::vector<double>> samples;
    std::vector<double> log_post;
    std::vector<double> sse;
    std::vector<double> sigma2;
    double acceptance_rate = 0;
    int burn_in = 0;
    std::vector<double> geweke_z;

    // Quantile of a component over the post-burn-in part.
    double quantile(int comp, double q) const;
    double mean(int comp) const;
};

using SumOfSquares = std::function<double(const std::vector<double>&)>;

// DRAM on a box with likelihood exp(-SS/(2 sigma^2)) and a uniform prior; n_obs drives the conjugate
// sigma^2 update. init_cov (row-major d x d, in parameter units) seeds the proposal when given.
PosteriorChain dram_sample(const SumOfSquares& ss, const std::vector<double>& lo, const std::vector<double>& hi,
                           const std::vector<double>& x0, int n_obs, const DramConfig& cfg,
                           const std::vector<double>* init_cov = nullptr);

PosteriorChain dram_mcmc(const ObservedSeries& data, const ParamVector& theta0, const ParamBounds& bounds,
                         const FitSetup& setup, const DramConfig& cfg);

// z-scores comparing the first `first` and last `last` fractions of each column.
std::vector<double> geweke_z(const std::vector<std::vector<double>>& columns, double first = 0.1,
                             double last = 0.5);
double geweke_z(const std::vector<double>& x, double first = 0.1, double last = 0.5);
// Spectral density at frequency zero (Bartlett window), i.e. n times the variance of the mean.
double spectral_variance0(const double* x, int n);

// Weekly incidence plus N(0, noise_sd^2) noise truncated at zero.
ObservedSeries synthetic_data(const ParamVector& theta_true, const FitSetup& setup, int n_weeks, double noise_sd,
                              std::uint64_t seed);

void write_fit_json(const std::string& path, const FitResult& fit, const PosteriorChain* chain);
void write_chain_csv(const std::string& path, const PosteriorChain& chain);

}  // namespace tfd
