#include "runconfig.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "tfd/errors.hpp"

namespace tfd::cli {

namespace {

using nlohmann::json;

class Section {
public:
    Section(const json& j, std::string path, std::set<std::string> keys) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!keys.count(it.key())) throw ConfigError(path_ + "." + it.key() + ": unknown field");
    }
    bool has(const char* k) const { return j_.contains(k); }
    std::string where(const char* k) const { return path_ + "." + k; }
    const json& at(const char* k) const { return j_.at(k); }

    void num(const char* k, double& v) const {
        if (!has(k)) return;
        if (!j_[k].is_number()) throw ConfigError(where(k) + ": expected a number");
        v = j_[k].get<double>();
    }
    template <class I>
    void integer(const char* k, I& v) const {
        if (!has(k)) return;
        if (!j_[k].is_number_integer()) throw ConfigError(where(k) + ": expected an integer");
        v = j_[k].get<I>();
    }
    void flag(const char* k, bool& v) const {
        if (!has(k)) return;
        if (!j_[k].is_boolean()) throw ConfigError(where(k) + ": expected true or false");
        v = j_[k].get<bool>();
    }
    void str(const char* k, std::string& v) const {
        if (!has(k)) return;
        if (!j_[k].is_string()) throw ConfigError(where(k) + ": expected a string");
        v = j_[k].get<std::string>();
    }
    void range(const char* k, double& lo, double& hi) const {
        if (!has(k)) return;
        const auto& r = j_[k];
        if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number())
            throw ConfigError(where(k) + ": expected [lo, hi]");
        lo = r[0].get<double>();
        hi = r[1].get<double>();
        if (!(lo < hi)) throw ConfigError(where(k) + ": lo must be below hi");
    }

private:
    const json& j_;
    std::string path_;
};

template <class Fn>
void checked(const std::string& what, Fn&& fn) {
    try {
        fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(what + ": " + e.what());
    }
}

void parse_model(const json& j, ModelParams& m) {
    Section s(j, "model", {"N_H", "mu_H", "alpha", "beta", "p", "b", "beta_VH", "beta_HV", "mu_V", "C", "delta"});
    s.num("N_H", m.N_H);
    s.num("mu_H", m.mu_H);
    s.num("alpha", m.alpha);
    s.num("beta", m.beta);
    s.num("p", m.p);
    s.num("b", m.b);
    s.num("beta_VH", m.beta_VH);
    s.num("beta_HV", m.beta_HV);
    s.num("mu_V", m.mu_V);
    s.num("C", m.C);
    s.num("delta", m.delta);
}

void parse_state(const json& j, StateVector& v) {
    Section s(j, "initial_state", {"S_H", "I_H", "R_H", "S_V", "I_V"});
    for (const char* k : {"S_H", "I_H", "R_H", "S_V", "I_V"})
        if (!s.has(k)) throw ConfigError(s.where(k) + ": required when initial_state is given");
    s.num("S_H", v.S_H);
    s.num("I_H", v.I_H);
    s.num("R_H", v.R_H);
    s.num("S_V", v.S_V);
    s.num("I_V", v.I_V);
}

void parse_control(const json& j, RunConfig& c) {
    Section s(j, "control", {"strategies", "weights", "relaxation", "conv_tol", "max_sweeps", "min_relaxation"});
    if (s.has("strategies")) {
        const auto& a = s.at("strategies");
        if (!a.is_array()) throw ConfigError("control.strategies: expected an array of names");
        for (const auto& e : a) {
            if (!e.is_string()) throw ConfigError("control.strategies: expected strings");
            const auto name = e.get<std::string>();
            checked("control.strategies", [&] { strategy_controls(name); });
            c.strategies.push_back(name);
        }
    }
    if (s.has("weights")) {
        Section w(s.at("weights"), "control.weights", {"A1", "A2", "B1", "B2", "B3", "B4", "B5", "B6", "c_m"});
        w.num("A1", c.weights.A1);
        w.num("A2", c.weights.A2);
        w.num("B1", c.weights.B1);
        w.num("B2", c.weights.B2);
        w.num("B3", c.weights.B3);
        w.num("B4", c.weights.B4);
        w.num("B5", c.weights.B5);
        w.num("B6", c.weights.B6);
        w.num("c_m", c.weights.c_m);
    }
    s.num("relaxation", c.sweep.relaxation);
    s.num("conv_tol", c.sweep.conv_tol);
    s.integer("max_sweeps", c.sweep.max_sweeps);
    s.num("min_relaxation", c.sweep.min_relaxation);
}

void parse_calibration(const json& j, RunConfig& c) {
    Section s(j, "calibration", {"data", "h", "n_starts", "max_evals", "chain_len", "burn_in_frac", "adapt_interval",
                                 "dr_scale", "seed", "bounds", "theta0"});
    s.str("data", c.data_path);
    s.num("h", c.fit_h);
    s.integer("n_starts", c.fit.n_starts);
    s.integer("max_evals", c.fit.max_evals);
    s.integer("chain_len", c.dram.chain_len);
    s.num("burn_in_frac", c.dram.burn_in_frac);
    s.integer("adapt_interval", c.dram.adapt_interval);
    s.num("dr_scale", c.dram.dr_scale);
    if (s.has("seed")) {
        s.integer("seed", c.fit.seed);
        c.dram.seed = c.fit.seed;
    }
    const std::set<std::string> names(kFreeNames.begin(), kFreeNames.end());
    if (s.has("bounds")) {
        Section b(s.at("bounds"), "calibration.bounds", names);
        for (int k = 0; k < kNumFree; ++k) b.range(kFreeNames[k], c.bounds.lo[k], c.bounds.hi[k]);
    }
    if (s.has("theta0")) {
        Section t(s.at("theta0"), "calibration.theta0", names);
        ParamVector th{};
        for (int k = 0; k < kNumFree; ++k) {
            if (!t.has(kFreeNames[k])) throw ConfigError(t.where(kFreeNames[k]) + ": required in theta0");
            t.num(kFreeNames[k], th[k]);
        }
        c.theta0 = th;
    }
}

void parse_sensitivity(const json& j, RunConfig& c) {
    Section s(j, "sensitivity", {"n", "h", "t_max", "seed", "total_cases", "bounds"});
    s.integer("n", c.gsa.n);
    s.num("h", c.gsa.h);
    s.num("t_max", c.gsa.t_max);
    s.integer("seed", c.gsa.seed);
    s.flag("total_cases", c.gsa.total_cases);
    if (s.has("bounds")) {
        Section b(s.at("bounds"), "sensitivity.bounds", std::set<std::string>(kGsaNames.begin(), kGsaNames.end()));
        for (int k = 0; k < kNumGsa; ++k) b.range(kGsaNames[k], c.gsa_bounds.lo[k], c.gsa_bounds.hi[k]);
    }
}

}  // namespace

RunConfig parse_config(const json& doc) {
    RunConfig c;
    c.raw = doc;
    Section top(doc, "config",
                {"model", "initial_state", "grid", "solver", "control", "calibration", "sensitivity", "output", "workers"});
    if (top.has("model")) parse_model(top.at("model"), c.model);
    checked("model", [&] { c.model.validate(); });
    c.bounds = ParamBounds::defaults(c.model.N_H);

    if (top.has("initial_state")) {
        StateVector v;
        parse_state(top.at("initial_state"), v);
        c.initial_state = v;
    }
    checked("initial_state", [&] { validate_initial_state(c.model, c.init()); });

    if (top.has("grid")) {
        Section g(top.at("grid"), "grid", {"h", "theta", "t_max"});
        g.num("h", c.h);
        g.num("theta", c.theta);
        g.num("t_max", c.t_max);
    }
    checked("grid", [&] { make_grid(c.h, c.t_max, c.theta); });

    if (top.has("solver")) {
        Section s(top.at("solver"), "solver", {"tol", "max_iter", "floor_negative_force"});
        s.num("tol", c.step.tol);
        s.integer("max_iter", c.step.max_iter);
        s.flag("floor_negative_force", c.step.floor_negative_force);
        if (!(c.step.tol > 0.0) || c.step.max_iter < 1) throw ConfigError("solver: tol > 0 and max_iter >= 1 required");
    }
    if (top.has("control")) parse_control(top.at("control"), c);
    checked("control.weights", [&] { c.weights.validate(); });
    checked("control", [&] { c.sweep.validate(); });

    if (top.has("calibration")) parse_calibration(top.at("calibration"), c);
    checked("calibration.bounds", [&] { c.bounds.validate(); });
    if (c.theta0 && !c.bounds.contains(*c.theta0)) throw ConfigError("calibration.theta0: outside the bounds");
    if (c.fit.n_starts < 1) throw ConfigError("calibration.n_starts: must be >= 1");
    if (c.dram.chain_len < 100) throw ConfigError("calibration.chain_len: must be >= 100");
    checked("calibration.h", [&] { make_grid(c.fit_h, 7.0); });

    if (top.has("sensitivity")) parse_sensitivity(top.at("sensitivity"), c);
    if (c.gsa.n < 10) throw ConfigError("sensitivity.n: must be >= 10");
    checked("sensitivity", [&] { make_grid(c.gsa.h, c.gsa.t_max); });

    top.str("output", c.out_dir);
    top.integer("workers", c.workers);
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    try {
        return parse_config(doc);
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::string config_hash(const json& doc) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : doc.dump()) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace tfd::cli
