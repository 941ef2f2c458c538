// SPDX-License-Identifier: Apache-2.0
//
// Experiment recipes. Each recipe turns a validated ScenarioConfig into one or
// more CSV tables plus a manifest; nothing here touches the filesystem until
// write_result() is called.
#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "nfvs/beamformer.hpp"
#include "nfvs/echo.hpp"
#include "nfvs/estimator.hpp"
#include "nfvs/geometry.hpp"
#include "nfvs/harness/config.hpp"
#include "nfvs/harness/log.hpp"
#include "nfvs/harness/output.hpp"
#include "nfvs/units.hpp"

namespace nfvs::harness {

/// Command-line overrides layered on top of the config file.
struct Overrides {
    std::optional<std::vector<double>> distances_m;
    std::optional<std::vector<double>> powers_dbm;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output_dir;
    std::optional<std::size_t> num_cpis;
    bool noise_free = false;
    bool inject_truth = false;
};

inline void apply_overrides(ScenarioConfig& cfg, const Overrides& o) {
    if (o.distances_m) {
        for (double d : *o.distances_m)
            if (!(d > 0.0)) throw ConfigError("--distances: distances must be positive");
        cfg.experiment.distances_m = *o.distances_m;
    }
    if (o.powers_dbm) {
        cfg.powers_w.clear();
        for (double p : *o.powers_dbm) cfg.powers_w.push_back(dbm_to_watt(p));
    }
    if (o.seed) cfg.seed = *o.seed;
    if (o.output_dir) cfg.output_dir = *o.output_dir;
    if (o.num_cpis) cfg.experiment.num_cpis = *o.num_cpis;
    if (o.noise_free) cfg.experiment.sensing_noise = false;
    if (o.inject_truth) cfg.experiment.inject_truth = true;
}

struct ExperimentResult {
    std::string experiment;
    std::map<std::string, CsvTable> tables; ///< file stem -> table
    nlohmann::json extra = nlohmann::json::object();
};

inline nlohmann::json manifest_for(const ScenarioConfig& cfg, const ExperimentResult& r) {
    const nlohmann::json canonical = to_json(cfg);
    // where the files go does not change what is in them
    nlohmann::json hashed = canonical;
    hashed.erase("output");
    nlohmann::json files = nlohmann::json::array();
    for (const auto& [stem, table] : r.tables) files.push_back(stem + ".csv");
    return {{"experiment", r.experiment},
            {"version", kVersion},
            {"seed", cfg.seed},
            {"config_hash", fnv1a_hex(hashed.dump())},
            {"config", canonical},
            {"derived", derived_quantities(cfg)},
            {"files", files},
            {"details", r.extra}};
}

/// Writes <out>/<experiment>/<stem>.csv and manifest.json; returns the directory.
inline std::filesystem::path write_result(const ScenarioConfig& cfg, const ExperimentResult& r) {
    const std::filesystem::path dir = std::filesystem::path(cfg.output_dir) / r.experiment;
    for (const auto& [stem, table] : r.tables) table.save(dir / (stem + ".csv"));
    write_json(dir / "manifest.json", manifest_for(cfg, r));
    log::info("wrote ", r.tables.size(), " table(s) to ", dir.string());
    return dir;
}

inline void require_powers(const ScenarioConfig& cfg, const std::string& experiment) {
    if (cfg.powers_w.empty())
        throw ConfigError("power: required for '" + experiment + "' (config power.dbm / power.watts or --powers)");
}

/// Sensing-only frame toward a static target: the non-compensated beam at the
/// true position carrying QPSK symbols. `index` selects the RNG streams.
inline EchoFrame sensing_frame(const ScenarioConfig& cfg, const TargetState& truth, double power,
                               std::uint64_t seed, std::uint64_t index) {
    const ArrayGeometry geom = cfg.geometry();
    auto sym_rng = derive_stream(seed, stream::symbols, index);
    const Eigen::VectorXcd symbols = qpsk_symbols(static_cast<Eigen::Index>(cfg.symbols_per_cpi), sym_rng);
    const Eigen::MatrixXcd S =
        transmit_frame({truth.position, {}, power, false}, geom, symbols, cfg.symbol_period());
    auto phase_rng = derive_stream(seed, stream::gain_phase, index);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
    const SensingLink link = SensingLink::from_radar_equation(
        geom.wavelength(), cfg.physical.tx_gain, cfg.physical.rx_gain, cfg.rcs_linear(),
        cfg.experiment.sensing_noise ? cfg.noise_power_w() : 0.0, phase(phase_rng));
    auto noise_rng = derive_stream(seed, stream::sensing_noise, index);
    return generate_echo(truth, geom, link, S, cfg.symbol_period(), noise_rng);
}

/// Per-sample receive SNR |beta|^2 ||X||_F^2 / (M N sigma^2) of a sensing
/// frame at the given power.
inline double receive_snr(const ScenarioConfig& cfg, const TargetState& truth, double power) {
    const ArrayGeometry geom = cfg.geometry();
    const Eigen::VectorXcd ones = Eigen::VectorXcd::Ones(static_cast<Eigen::Index>(cfg.symbols_per_cpi));
    const Eigen::MatrixXcd S = transmit_frame({truth.position, {}, power, false}, geom, ones, cfg.symbol_period());
    const double energy = model_matrix(truth.position, truth.velocity, geom, S, cfg.symbol_period()).squaredNorm();
    return cfg.radar_gain_power() * energy /
           (static_cast<double>(geom.size()) * static_cast<double>(cfg.symbols_per_cpi) * cfg.noise_power_w());
}

/// Transmit power that puts the receive SNR at `snr_db` for this target.
/// Unit-modulus symbols make ||X||_F^2 independent of the symbol draw, and it
/// scales linearly with power.
inline double equal_snr_power(const ScenarioConfig& cfg, const TargetState& truth, double snr_db) {
    return db_to_linear(snr_db) / receive_snr(cfg, truth, 1.0);
}

inline ExperimentResult run_ml_map(const ScenarioConfig& cfg) {
    const ArrayGeometry geom = cfg.geometry();
    const auto& ex = cfg.experiment;
    ExperimentResult r{"ml-map", {}, {}};
    const std::vector<std::string> head_r{"distance_m", "power_w", "v_radial", "objective", "objective_normalized"};
    const std::vector<std::string> head_t{"distance_m", "power_w", "v_transverse", "objective",
                                          "objective_normalized"};
    CsvTable radial(head_r);
    CsvTable transverse(head_t);
    CsvTable powers({"distance_m", "power_w", "power_dbm", "receive_snr_db"});

    for (std::size_t i = 0; i < ex.distances_m.size(); ++i) {
        const TargetState truth{{ex.distances_m[i], deg_to_rad(cfg.target.angle_deg)},
                                {cfg.target.v_radial, cfg.target.v_transverse}};
        check_position(truth.position, geom);
        const double power = equal_snr_power(cfg, truth, ex.snr_db);
        powers.add_row({ex.distances_m[i], power, watt_to_dbm(power), linear_to_db(receive_snr(cfg, truth, power))});
        const EchoFrame frame = sensing_frame(cfg, truth, power, cfg.seed, i);

        auto emit = [&](CsvTable& table, SliceAxis axis, double center, double other) {
            const auto slice = ml_slice(frame, geom, truth.position, axis, other, center - ex.slice_span,
                                        center + ex.slice_span, ex.slice_points);
            double peak = 0.0;
            for (const auto& s : slice) peak = std::max(peak, s.objective);
            for (const auto& s : slice)
                table.add_row({ex.distances_m[i], power, s.velocity, s.objective, peak > 0 ? s.objective / peak : 0.0});
        };
        emit(radial, SliceAxis::radial, truth.velocity.radial, truth.velocity.transverse);
        emit(transverse, SliceAxis::transverse, truth.velocity.transverse, truth.velocity.radial);
        log::info("ml-map: r = ", ex.distances_m[i], " m done");
    }
    r.tables.emplace("radial", std::move(radial));
    r.tables.emplace("transverse", std::move(transverse));
    r.tables.emplace("powers", std::move(powers));
    r.extra["snr_db"] = ex.snr_db;
    return r;
}

inline ExperimentResult run_convergence(const ScenarioConfig& cfg) {
    require_powers(cfg, "convergence");
    const ArrayGeometry geom = cfg.geometry();
    const TargetState truth = cfg.static_state();
    ExperimentResult r{"convergence", {}, {}};
    CsvTable trace({"power_dbm", "iteration", "v_radial", "v_transverse", "objective", "error_norm", "termination"});
    for (std::size_t p = 0; p < cfg.powers_w.size(); ++p) {
        const EchoFrame frame = sensing_frame(cfg, truth, cfg.powers_w[p], cfg.seed, p);
        const EstimateResult est = estimate_velocity(frame, geom, truth.position, cfg.estimator);
        for (std::size_t t = 0; t < est.iterate_trace.size(); ++t) {
            const Velocity& v = est.iterate_trace[t];
            const double err = std::hypot(v.radial - truth.velocity.radial, v.transverse - truth.velocity.transverse);
            trace.add_row({watt_to_dbm(cfg.powers_w[p]), static_cast<long long>(t), v.radial, v.transverse,
                           est.objective_trace[t], err, std::string(to_string(est.termination))});
        }
    }
    r.tables.emplace("trace", std::move(trace));
    return r;
}

inline TrackingScenario tracking_scenario(const ScenarioConfig& cfg, double power, std::uint64_t seed) {
    TrackingScenario sc;
    sc.geometry = cfg.geometry();
    sc.symbols_per_cpi = cfg.symbols_per_cpi;
    sc.symbol_period = cfg.symbol_period();
    sc.power = power;
    sc.tx_gain = cfg.physical.tx_gain;
    sc.rx_gain = cfg.physical.rx_gain;
    sc.rcs = cfg.rcs_linear();
    sc.noise_power = cfg.experiment.sensing_noise ? cfg.noise_power_w() : 0.0;
    sc.comm_noise_power = cfg.noise_power_w();
    sc.trajectory = cfg.make_trajectory();
    sc.num_cpis = cfg.experiment.num_cpis;
    sc.initial_error = {cfg.experiment.initial_error_range_m, deg_to_rad(cfg.experiment.initial_error_angle_deg)};
    sc.estimator = cfg.estimator;
    sc.estimator.coarse_grid.reset();
    sc.first_cpi_grid = cfg.estimator.coarse_grid;
    sc.inject_truth = cfg.experiment.inject_truth;
    sc.seed = seed;
    return sc;
}

inline ExperimentResult run_track(const ScenarioConfig& cfg) {
    require_powers(cfg, "track");
    ExperimentResult r{"track", {}, {}};
    CsvTable table({"power_dbm",     "cpi",          "time_s",        "true_x",         "true_y",
                    "pred_x",        "pred_y",       "true_range",    "true_angle_deg", "pred_range",
                    "pred_angle_deg", "true_v_radial", "true_v_transverse", "est_v_radial", "est_v_transverse",
                    "position_error", "iterations",  "termination"});
    const double dt = cfg.cpi_duration();
    for (double power : cfg.powers_w) {
        const auto records = run_tracking(tracking_scenario(cfg, power, cfg.seed));
        for (const auto& rec : records) {
            const Eigen::Vector2d t = to_cartesian(rec.truth.position);
            const Eigen::Vector2d p = to_cartesian(rec.predicted);
            table.add_row({watt_to_dbm(power), static_cast<long long>(rec.index),
                           static_cast<double>(rec.index) * dt, t.x(), t.y(), p.x(), p.y(),
                           rec.truth.position.range, rad_to_deg(rec.truth.position.angle), rec.predicted.range,
                           rad_to_deg(rec.predicted.angle), rec.truth.velocity.radial, rec.truth.velocity.transverse,
                           rec.estimated.radial, rec.estimated.transverse, (t - p).norm(),
                           static_cast<long long>(rec.iterations), std::string(to_string(rec.termination))});
        }
        log::info("track: P = ", watt_to_dbm(power), " dBm, ", records.size(), " CPIs");
    }
    r.tables.emplace("track", std::move(table));
    return r;
}

inline ExperimentResult run_rate_curve(const ScenarioConfig& cfg) {
    require_powers(cfg, "rate-curve");
    ExperimentResult r{"rate-curve", {}, {}};
    CsvTable table({"power_dbm", "cpi", "time_s", "sensing_only", "rate", "rate_optimal", "rate_no_dfc"});
    const double dt = cfg.cpi_duration();
    for (double power : cfg.powers_w) {
        const auto records = run_tracking(tracking_scenario(cfg, power, cfg.seed));
        for (const auto& rec : records) {
            table.add_row({watt_to_dbm(power), static_cast<long long>(rec.index),
                           static_cast<double>(rec.index) * dt, static_cast<long long>(rec.sensing_only ? 1 : 0),
                           rec.rate, rec.rate_optimal, rec.rate_no_dfc});
        }
        log::info("rate-curve: P = ", watt_to_dbm(power), " dBm, ", records.size(), " CPIs");
    }
    r.tables.emplace("rate", std::move(table));
    r.extra["inject_truth"] = cfg.experiment.inject_truth;
    return r;
}

inline const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"ml-map", "convergence", "track", "rate-curve"};
    return names;
}

inline ExperimentResult run_experiment(const std::string& name, const ScenarioConfig& cfg) {
    try {
        if (name == "ml-map") return run_ml_map(cfg);
        if (name == "convergence") return run_convergence(cfg);
        if (name == "track") return run_track(cfg);
        if (name == "rate-curve") return run_rate_curve(cfg);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw Error(name + ": " + e.what());
    }
    throw ConfigError("unknown experiment '" + name + "'");
}

} // namespace nfvs::harness
