// SPDX-License-Identifier: Apache-2.0
//
// nfvs_sim: command-line driver for the experiment recipes.
//
//   nfvs_sim <experiment> (--config FILE | --preset paper-2024) [options]
//
// Experiments: ml-map, convergence, track, rate-curve, monte-carlo, config.
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "nfvs/harness/config.hpp"
#include "nfvs/harness/experiments.hpp"
#include "nfvs/harness/log.hpp"
#include "nfvs/harness/monte_carlo.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::vector<double> distances;
    std::vector<double> powers;
    std::optional<std::size_t> num_cpis;
    bool noise_free = false;
    bool inject_truth = false;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
    cmd->add_option("--config", a.config_path, "Scenario configuration (JSON)")->check(CLI::ExistingFile);
    cmd->add_option("--preset", a.preset, "Built-in preset applied under the config")
        ->check(CLI::IsMember({"paper-2024"}));
    cmd->add_option("--seed", a.seed, "Master RNG seed");
    cmd->add_option("--out", a.out, "Output directory");
    cmd->add_option("--distances", a.distances, "Target distances in m (ml-map)")->delimiter(',');
    cmd->add_option("--powers", a.powers, "Transmit powers in dBm")->delimiter(',');
    cmd->add_option("--num-cpis", a.num_cpis, "Limit the number of CPIs (track, rate-curve)");
    cmd->add_flag("--noise-free", a.noise_free, "Disable sensing receiver noise");
    cmd->add_flag("--inject-truth", a.inject_truth, "Debug: beamform with the true user state");
}

nfvs::harness::ScenarioConfig resolve(const CommonArgs& a) {
    using nfvs::harness::json;
    if (a.config_path.empty() && a.preset.empty()) throw nfvs::ConfigError("one of --config or --preset is required");
    json doc = json::object();
    if (!a.config_path.empty()) {
        std::ifstream in(a.config_path);
        try {
            in >> doc;
        } catch (const json::parse_error& e) {
            throw nfvs::ConfigError("config: '" + a.config_path + "' is not valid JSON: " + e.what());
        }
    }
    if (!a.preset.empty()) doc["preset"] = a.preset;
    auto cfg = nfvs::harness::parse_config(doc);

    nfvs::harness::Overrides o;
    if (!a.distances.empty()) o.distances_m = a.distances;
    if (!a.powers.empty()) o.powers_dbm = a.powers;
    o.seed = a.seed;
    o.output_dir = a.out;
    o.num_cpis = a.num_cpis;
    o.noise_free = a.noise_free;
    o.inject_truth = a.inject_truth;
    nfvs::harness::apply_overrides(cfg, o);
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Near-field velocity sensing and predictive beamforming simulator"};
    app.require_subcommand(1);

    CommonArgs common;
    std::vector<CLI::App*> experiments;
    for (const auto& name : nfvs::harness::experiment_names()) {
        auto* cmd = app.add_subcommand(name, "Run the " + name + " experiment");
        add_common(cmd, common);
        experiments.push_back(cmd);
    }

    auto* mc = app.add_subcommand("monte-carlo", "Repeat an experiment over independent trials");
    add_common(mc, common);
    std::string mc_experiment = "convergence";
    std::size_t trials = 1;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    mc->add_option("--experiment", mc_experiment, "convergence or track")
        ->check(CLI::IsMember({"convergence", "track"}));
    mc->add_option("--trials", trials, "Number of trials")->check(CLI::PositiveNumber);
    mc->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

    auto* show = app.add_subcommand("config", "Validate a configuration and print it with derived quantities");
    add_common(show, common);

    CLI11_PARSE(app, argc, argv);

    try {
        const auto cfg = resolve(common);
        if (show->parsed()) {
            nlohmann::json j = nfvs::harness::to_json(cfg);
            j["derived"] = nfvs::harness::derived_quantities(cfg);
            std::cout << j.dump(2) << '\n';
            return 0;
        }
        if (mc->parsed()) {
            const auto result = nfvs::harness::monte_carlo(mc_experiment, cfg, trials, threads);
            auto tables = nfvs::harness::monte_carlo_tables(result);
            tables.extra["trials"] = trials;
            const auto dir = nfvs::harness::write_result(cfg, tables);
            std::cout << dir.string() << '\n';
            return 0;
        }
        for (auto* cmd : experiments) {
            if (!cmd->parsed()) continue;
            const auto result = nfvs::harness::run_experiment(cmd->get_name(), cfg);
            const auto dir = nfvs::harness::write_result(cfg, result);
            std::cout << dir.string() << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "nfvs_sim: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
