#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "runconfig.hpp"
#include "tfd/errors.hpp"
#include "tfd/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tfd;

namespace {

constexpr const char* kVersion = "1.0.0";

enum Exit { kOk = 0, kConfig = 2, kNumerical = 3, kIo = 4 };

struct Manifest {
    json stages = json::array();
    void stage(const std::string& name, const std::string& status, const std::string& msg = {}) {
        json s{{"name", name}, {"status", status}};
        if (!msg.empty()) s["message"] = msg;
        stages.push_back(s);
    }
};

void write_json(const fs::path& p, const json& j) {
    std::ofstream out(p);
    if (!out) throw IoError("cannot open " + p.string() + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed for " + p.string());
}

json state_json(const StateVector& s) {
    return {{"S_H", s.S_H}, {"I_H", s.I_H}, {"R_H", s.R_H}, {"S_V", s.S_V}, {"I_V", s.I_V}};
}

json reduced_json(const Reduced& r) { return {{"S_H", r[0]}, {"I_H", r[1]}, {"I_V", r[2]}}; }

json routh_json(const RouthRecord& r) {
    return {{"A1", r.A1}, {"B1", r.B1}, {"C1", r.C1}, {"A1B1_minus_C1", r.A1B1_minus_C1}, {"stable", r.stable}};
}

void cmd_simulate(const cli::RunConfig& c, const fs::path& out, Manifest& m) {
    const auto grid = make_grid(c.h, c.t_max, c.theta);
    const Trajectory tr = simulate(c.model, c.init(), grid, c.step);
    m.stage("simulate", "ok");
    write_trajectory_csv((out / "trajectory.csv").string(), tr);
    const auto inv = check_invariants(tr, c.model);
    json j{{"r0", r0(c.model)},
           {"steps", grid.n_steps},
           {"final_state", state_json(tr.states.back())},
           {"cumulative_cases", cumulative_cases(tr)},
           {"weekly_incidence", incidence_series(tr)},
           {"clip_events", tr.clip_events},
           {"floor_events", tr.floor_events},
           {"invariants",
            {{"max_conservation_error", inv.max_conservation_error},
             {"min_compartment", inv.min_compartment},
             {"max_vector_ratio", inv.max_vector_ratio},
             {"ok", inv.ok()}}}};
    write_json(out / "summary.json", j);
    m.stage("write", "ok");
}

void cmd_analyze(const cli::RunConfig& c, const fs::path& out, Manifest& m) {
    const auto dfe = disease_free_equilibrium(c.model);
    const auto end = endemic_equilibrium(c.model);
    json j{{"r0", r0(c.model)}, {"dfe", reduced_json(dfe.state)}, {"endemic", nullptr}};
    if (end) {
        j["endemic"] = {{"state", reduced_json(end->state)}, {"residual", end->residual}};
        if (end->routh) j["routh"] = routh_json(*end->routh);
    }
    m.stage("analyze", "ok");
    write_json(out / "analysis.json", j);
    m.stage("write", "ok");
}

void write_schedule_csv(const fs::path& p, const SweepResult& r) {
    std::ofstream out(p);
    if (!out) throw IoError("cannot open " + p.string() + " for writing");
    out << "t,psi,zeta,kappa,S_H,I_H,R_H,S_V,I_V\n";
    out.precision(10);
    for (std::size_t i = 0; i < r.traj.states.size(); ++i) {
        const auto& s = r.traj.states[i];
        out << r.traj.grid.t(static_cast<int>(i)) << ',' << r.schedule.psi[i] << ',' << r.schedule.zeta[i] << ','
            << r.schedule.kappa[i] << ',' << s.S_H << ',' << s.I_H << ',' << s.R_H << ',' << s.S_V << ',' << s.I_V
            << '\n';
    }
    if (!out) throw IoError("write failed for " + p.string());
}

void cmd_control(const cli::RunConfig& c, const fs::path& out, Manifest& m, int workers) {
    const auto names = c.strategies.empty() ? strategy_names() : c.strategies;
    const auto grid = make_grid(c.h, c.t_max, c.theta);
    std::vector<StrategyReport> rows(names.size());
    std::vector<SweepResult> full(names.size());
    parallel_for(static_cast<int>(names.size()), workers, [&](int i) {
        rows[i] = run_strategy(names[i], c.model, c.init(), grid, c.weights, c.sweep, &full[i]);
    });
    for (const auto& r : rows) m.stage("control:" + r.name, r.converged || r.active.empty() ? "ok" : "not_converged");
    write_strategy_csv((out / "strategies.csv").string(), rows);
    for (std::size_t i = 0; i < names.size(); ++i) write_schedule_csv(out / ("schedule_" + names[i] + ".csv"), full[i]);
    m.stage("write", "ok");
}

FitSetup fit_setup(const cli::RunConfig& c) {
    FitSetup s;
    s.base = c.model;
    s.h = c.fit_h;
    s.step = c.step;
    return s;
}

ObservedSeries load_data(const cli::RunConfig& c) {
    if (c.data_path.empty()) throw ConfigError("calibration.data: a data CSV is required (or pass --data)");
    return read_observed_csv(c.data_path);
}

void cmd_fit(const cli::RunConfig& c, const fs::path& out, Manifest& m, int workers) {
    const auto data = load_data(c);
    auto fc = c.fit;
    fc.workers = workers;
    const FitResult fr = least_squares_fit(data, c.bounds, fit_setup(c), fc);
    m.stage("fit", fr.converged ? "ok" : "budget_exhausted");
    write_fit_json((out / "fit.json").string(), fr, nullptr);
    m.stage("write", "ok");
}

void cmd_mcmc(const cli::RunConfig& c, const fs::path& out, Manifest& m, int workers) {
    const auto data = load_data(c);
    const auto setup = fit_setup(c);
    FitResult fr;
    if (c.theta0) {
        fr.theta_hat = *c.theta0;
        fr.sse = sse(fr.theta_hat, data, setup);
        fr.n_starts = 0;
        m.stage("fit", "skipped");
    } else {
        auto fc = c.fit;
        fc.workers = workers;
        fr = least_squares_fit(data, c.bounds, setup, fc);
        m.stage("fit", fr.converged ? "ok" : "budget_exhausted");
    }
    const PosteriorChain ch = dram_mcmc(data, fr.theta_hat, c.bounds, setup, c.dram);
    m.stage("mcmc", "ok");
    write_chain_csv((out / "chain.csv").string(), ch);
    write_fit_json((out / "fit.json").string(), fr, &ch);
    json g = json::object();
    for (int k = 0; k < kNumFree && k < static_cast<int>(ch.geweke_z.size()); ++k) g[kFreeNames[k]] = ch.geweke_z[k];
    write_json(out / "geweke.json", {{"acceptance_rate", ch.acceptance_rate}, {"burn_in", ch.burn_in}, {"z", g}});
    m.stage("write", "ok");
}

void cmd_gsa(const cli::RunConfig& c, const fs::path& out, Manifest& m, int workers) {
    auto gc = c.gsa;
    gc.workers = workers;
    const PrccReport rep = run_gsa(c.gsa_bounds, c.model, c.init(), gc);
    m.stage("gsa", "ok", "dropped r0=" + std::to_string(rep.dropped_r0) +
                             " total_cases=" + std::to_string(rep.dropped_cases));
    write_prcc_csv((out / "prcc.csv").string(), rep);
    m.stage("write", "ok");
}

void cmd_synthesize(const cli::RunConfig& c, const fs::path& out, Manifest& m, int weeks, double noise_frac) {
    const FitSetup setup = fit_setup(c);
    const ParamVector th = pack(c.model, c.init());
    const auto clean = model_incidence(th, setup, weeks);
    double mean = 0.0;
    for (double v : clean) mean += v;
    mean /= weeks;
    const auto data = synthetic_data(th, setup, weeks, noise_frac * mean, c.fit.seed);
    m.stage("synthesize", "ok");
    write_observed_csv((out / "data.csv").string(), data);
    m.stage("write", "ok");
}

std::string iso_now() {
    const std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tempered fractional dengue model: simulation, analysis, control, calibration, sensitivity"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string config_path, out_opt, data_opt;
    std::int64_t seed = -1;
    int workers = -1;
    int weeks = 52;
    double noise = 0.05;

    const std::vector<std::pair<const char*, const char*>> cmds{
        {"simulate", "Integrate the model and write trajectory.csv and summary.json"},
        {"analyze", "Write r0, equilibria and the Routh-Hurwitz record to analysis.json"},
        {"control", "Run the control strategies and write strategies.csv plus per-node schedules"},
        {"fit", "Multi-start least squares fit to weekly incidence, written to fit.json"},
        {"mcmc", "Least squares followed by DRAM, written to chain.csv, fit.json and geweke.json"},
        {"gsa", "LHS/PRCC sensitivity of r0 and total cases, written to prcc.csv"},
        {"synthesize", "Write noisy weekly incidence from the configured model to data.csv"}};
    std::vector<CLI::App*> subs;
    for (const auto& [name, help] : cmds) {
        auto* s = app.add_subcommand(name, help);
        s->add_option("--config", config_path, "JSON run configuration");
        s->add_option("--out", out_opt, "Output directory (overrides the config)");
        s->add_option("--seed", seed, "Seed for every stochastic stage (overrides the config)")->check(CLI::NonNegativeNumber);
        s->add_option("--workers", workers, "Worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
        if (std::string(name) == "fit" || std::string(name) == "mcmc")
            s->add_option("--data", data_opt, "Weekly incidence CSV with header week,cases");
        if (std::string(name) == "synthesize") {
            s->add_option("--weeks", weeks, "Number of weeks")->check(CLI::PositiveNumber);
            s->add_option("--noise", noise, "Noise sd as a fraction of mean weekly incidence")->check(CLI::NonNegativeNumber);
        }
        subs.push_back(s);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kConfig;
    }
    std::string cmd;
    for (auto* s : subs)
        if (s->parsed()) cmd = s->get_name();

    const auto t0 = std::chrono::steady_clock::now();
    Manifest man;
    json manifest{{"tool", "tfd"}, {"version", kVersion}, {"command", cmd}, {"started_at", iso_now()}};
    fs::path out = out_opt;
    int rc = kOk;
    try {
        std::error_code early;
        if (!out.empty()) fs::create_directories(out, early);
        cli::RunConfig c;
        if (!config_path.empty()) {
            c = cli::load_config(config_path);
        } else {
            c = cli::parse_config(json::object());
        }
        if (!data_opt.empty()) c.data_path = data_opt;
        if (seed >= 0) {
            c.fit.seed = c.dram.seed = c.gsa.seed = static_cast<std::uint64_t>(seed);
        }
        const int w = workers >= 0 ? workers : c.workers;
        out = out_opt.empty() ? fs::path(c.out_dir) : fs::path(out_opt);
        std::error_code ec;
        fs::create_directories(out, ec);
        if (ec) throw IoError("cannot create output directory " + out.string() + ": " + ec.message());

        manifest["config_hash"] = cli::config_hash(c.raw);
        manifest["config_path"] = config_path;
        manifest["seeds"] = {{"calibration", c.fit.seed}, {"mcmc", c.dram.seed}, {"sensitivity", c.gsa.seed}};
        manifest["workers"] = w;

        if (cmd == "simulate") cmd_simulate(c, out, man);
        else if (cmd == "analyze") cmd_analyze(c, out, man);
        else if (cmd == "control") cmd_control(c, out, man, w);
        else if (cmd == "fit") cmd_fit(c, out, man, w);
        else if (cmd == "mcmc") cmd_mcmc(c, out, man, w);
        else if (cmd == "gsa") cmd_gsa(c, out, man, w);
        else if (cmd == "synthesize") cmd_synthesize(c, out, man, weeks, noise);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        man.stage(cmd, "failed", e.what());
        rc = kConfig;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        man.stage(cmd, "failed", e.what());
        rc = kIo;
    } catch (const Error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        man.stage(cmd, "failed", e.what());
        rc = kNumerical;
    }
    manifest["stages"] = man.stages;
    manifest["exit_code"] = rc;
    manifest["wall_clock_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!out.empty() && fs::is_directory(out)) {
        try {
            write_json(out / "manifest.json", manifest);
        } catch (const IoError& e) {
            std::cerr << "i/o error: " << e.what() << '\n';
            if (rc == kOk) rc = kIo;
        }
    } else {
        std::cerr << manifest.dump() << '\n';
    }
    return rc;
}
