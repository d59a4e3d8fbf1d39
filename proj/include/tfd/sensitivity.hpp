#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tfd/solver.hpp"

namespace tfd {

constexpr int kNumGsa = 7;
using GsaRow = std::array<double, kNumGsa>;
enum GsaIndex { gAlpha, gBeta, gB, gBetaHV, gBetaVH, gDelta, gMuV };
extern const std::array<const char*, kNumGsa> kGsaNames;

struct GsaBounds {
    GsaRow lo{}, hi{};
    static GsaBounds defaults();
    void validate() const;
};

struct SampleMatrix {
    GsaBounds bounds;
    std::vector<GsaRow> rows;
};

SampleMatrix gsa_sample(const GsaBounds& bounds, int n, std::uint64_t seed);

// Row values replace the base parameters; beta and p move together.
ModelParams apply_row(const GsaRow& row, const ModelParams& base);

double response_r0(const GsaRow& row, const ModelParams& base);
double response_total_cases(const GsaRow& row, const ModelParams& base, const StateVector& init, double h,
                            double t_max);

struct PrccColumn {
    double prcc = 0;
    double p_value = 1;
    bool defined = false;  // false for a constant column or response
};

// Average ranks (1-based), ties share the mean rank.
std::vector<double> average_ranks(const std::vector<double>& x);

// PRCC of every column of X (n rows) against y, conditioning on all other columns.
std::vector<PrccColumn> prcc(const std::vector<std::vector<double>>& X, const std::vector<double>& y);

struct PrccEntry {
    std::string parameter, response;
    double prcc = 0, p_value = 1;
    int n_effective = 0;
    bool defined = false;
    bool significant = false;  // p < 0.01
};

struct PrccReport {
    int n_samples = 0;
    int dropped_r0 = 0, dropped_cases = 0;
    std::vector<PrccEntry> entries;
    const PrccEntry& find(const std::string& parameter, const std::string& response) const;
};

struct GsaConfig {
    int n = 1000;
    std::uint64_t seed = 1;
    int workers = 1;
    double h = 0.2;
    double t_max = 388.0;  // days from 9 April 2010 to 2 May 2011
    bool total_cases = true;
};

PrccReport run_gsa(const GsaBounds& bounds, const ModelParams& base, const StateVector& init, const GsaConfig& cfg);

void write_prcc_csv(const std::string& path, const PrccReport& rep);

}  // namespace tfd
