#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pltrap/experiment.hpp"
#include "pltrap/parallel.hpp"

using pltrap::ExperimentConfig;

namespace {

void merge_config_file(ExperimentConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file " + path);
    nlohmann::json j;
    in >> j;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() == "seed") { cfg.seed = it.value().get<uint64_t>(); continue; }
        if (it.key() == "out") { cfg.out_dir = it.value().get<std::string>(); continue; }
        if (it.key() == "threads") { cfg.threads = it.value().get<int>(); continue; }
        if (it.value().is_string()) cfg.params[it.key()] = it.value().get<std::string>();
        else cfg.params[it.key()] = it.value().dump();
    }
}

void apply_overrides(ExperimentConfig& cfg, const std::vector<std::string>& sets) {
    for (const auto& s : sets) {
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("override must look like key=value: " + s);
        cfg.params[s.substr(0, eq)] = s.substr(eq + 1);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"perturbed-lattice trap laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".";
    uint64_t seed = 1;
    int threads = pltrap::default_threads();
    app.add_option("--config", config_path, "JSON config file with flat dotted keys");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", threads, "worker threads");

    struct Sub {
        CLI::App* cmd = nullptr;
        std::vector<std::string> sets;
    };
    std::map<std::string, Sub> subs;
    for (const auto& kind : pltrap::known_experiment_kinds()) {
        Sub s;
        s.cmd = app.add_subcommand(kind, "run the " + kind + " experiment");
        subs[kind] = s;
        subs[kind].cmd->add_option("-P,--set", subs[kind].sets, "override: key=value");
    }

    // spec-named conveniences for the survive/scaling commands
    std::string sv_theta, sv_d, sv_tgrid, sv_paths, sv_configs, sv_dt, sv_method;
    auto* survive = subs["survive"].cmd;
    survive->add_option("--theta", sv_theta, "displacement tail exponent");
    survive->add_option("--d", sv_d, "dimension");
    survive->add_option("--t-grid", sv_tgrid, "comma list of times");
    survive->add_option("--paths", sv_paths, "paths per configuration");
    survive->add_option("--configs", sv_configs, "configurations");
    survive->add_option("--dt", sv_dt, "Euler step");
    survive->add_option("--method", sv_method, "mc or proxy");
    std::string sc_input, sc_d, sc_logcorr;
    auto* scaling = subs["scaling"].cmd;
    scaling->add_option("--input", sc_input, "survive CSV to fit");
    scaling->add_option("--d", sc_d, "dimension");
    scaling->add_option("--log-correction", sc_logcorr, "fit loglog regressor (0/1)");

    CLI11_PARSE(app, argc, argv);

    try {
        ExperimentConfig cfg;
        for (auto& [kind, sub] : subs)
            if (sub.cmd->parsed()) cfg.kind = kind;
        cfg.seed = seed;
        cfg.out_dir = out_dir;
        cfg.threads = threads;
        if (!config_path.empty()) merge_config_file(cfg, config_path);
        apply_overrides(cfg, subs[cfg.kind].sets);
        if (cfg.kind == "survive") {
            if (!sv_theta.empty()) cfg.params["law.theta"] = sv_theta;
            if (!sv_d.empty()) cfg.params["d"] = sv_d;
            if (!sv_tgrid.empty()) cfg.params["t.grid"] = sv_tgrid;
            if (!sv_paths.empty()) cfg.params["paths"] = sv_paths;
            if (!sv_configs.empty()) cfg.params["configs"] = sv_configs;
            if (!sv_dt.empty()) cfg.params["dt"] = sv_dt;
            if (!sv_method.empty()) cfg.params["method"] = sv_method;
        }
        if (cfg.kind == "scaling") {
            if (!sc_input.empty()) cfg.params["input.csv"] = sc_input;
            if (!sc_d.empty()) cfg.params["d"] = sc_d;
            if (!sc_logcorr.empty()) cfg.params["fit.log_correction"] = sc_logcorr;
        }
        pltrap::run_experiment(cfg);
        return 0;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
}
