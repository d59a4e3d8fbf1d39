#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tfd/calibrate.hpp"
#include "tfd/optctl.hpp"
#include "tfd/sensitivity.hpp"

namespace tfd::cli {

// Units: rates in 1/day, times in days, populations in persons.
struct RunConfig {
    ModelParams model;
    std::optional<StateVector> initial_state;  // defaults to control_initial_state(model)
    double h = 0.2, theta = 0.0, t_max = 364.0;
    StepSolveConfig step;

    std::vector<std::string> strategies;  // empty means baseline and S1..S7
    CostWeights weights;
    SweepConfig sweep;

    std::string data_path;
    double fit_h = 0.5;
    ParamBounds bounds;
    FitConfig fit;
    DramConfig dram;
    std::optional<ParamVector> theta0;  // skips the least-squares stage of mcmc

    GsaBounds gsa_bounds = GsaBounds::defaults();
    GsaConfig gsa;

    std::string out_dir = "out";
    int workers = 1;
    nlohmann::json raw;  // parsed document, for the manifest hash

    StateVector init() const { return initial_state ? *initial_state : control_initial_state(model); }
};

// Unknown keys and invalid values raise ConfigError naming the offending field.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);

// 64-bit FNV-1a of the compact JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& doc);

}  // namespace tfd::cli
