// SPDX-License-Identifier: Apache-2.0
//
// Scenario configuration: a JSON document with flat sections
//
//   preset      optional base ("paper-2024"); every other key overrides it
//   physical    carrier_hz, bandwidth_hz, num_antennas, spacing ("half-wavelength"
//               or metres), tx_gain, rx_gain, rcs_db, noise_density_dbm_hz
//   cpi         symbols
//   power       dbm | watts
//   target      range_m, angle_deg, v_radial, v_transverse   (static scenarios)
//   trajectory  speed, waypoints [[x, y], ...]  or  turning {start, heading_deg,
//               turn_deg, segment_m, segments}
//   estimator   max_iters, grad_tol, step_tol, direction, line_search{...},
//               coarse_grid{v_max, points} | null
//   experiment  distances_m, snr_db, slice_span, slice_points, num_cpis,
//               sensing_noise, inject_truth, initial_error{range_m, angle_deg}
//   seed        unsigned 64-bit
//   output      directory, formats
#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "nfvs/echo.hpp"
#include "nfvs/error.hpp"
#include "nfvs/estimator.hpp"
#include "nfvs/geometry.hpp"
#include "nfvs/trajectory.hpp"
#include "nfvs/units.hpp"

namespace nfvs::harness {

using json = nlohmann::json;

struct PhysicalConfig {
    double carrier_hz = 0.0;
    double bandwidth_hz = 0.0;
    std::size_t num_antennas = 0;
    std::optional<double> spacing_m; ///< empty: half-wavelength
    double tx_gain = 1.0;
    double rx_gain = 1.0;
    double rcs_db = 0.0;
    double noise_density_dbm_hz = -174.0;
};

struct StaticTarget {
    double range_m = 10.0;
    double angle_deg = 60.0;
    double v_radial = 10.0;
    double v_transverse = 8.0;
};

struct TrajectoryConfig {
    double speed = 20.0;
    std::vector<Eigen::Vector2d> waypoints;
};

struct ExperimentConfig {
    std::vector<double> distances_m{10.0, 40.0, 80.0};
    double snr_db = -10.0; ///< per-sample receive SNR for the equal-SNR ml-map
    double slice_span = 10.0;
    int slice_points = 401;
    std::size_t num_cpis = 0;
    bool sensing_noise = true;
    bool inject_truth = false;
    double initial_error_range_m = 0.0;
    double initial_error_angle_deg = 0.0;
};

struct ScenarioConfig {
    std::optional<std::string> preset;
    PhysicalConfig physical;
    std::size_t symbols_per_cpi = 0;
    std::vector<double> powers_w; ///< one run per entry
    StaticTarget target;
    TrajectoryConfig trajectory;
    EstimatorOptions estimator;
    ExperimentConfig experiment;
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    std::vector<std::string> formats{"csv"};

    // derived
    double wavelength() const { return wavelength_for(physical.carrier_hz); }
    double spacing() const { return physical.spacing_m.value_or(wavelength() / 2.0); }
    double symbol_period() const { return 1.0 / physical.bandwidth_hz; }
    double cpi_duration() const { return static_cast<double>(symbols_per_cpi) * symbol_period(); }
    double noise_power_w() const {
        return dbm_to_watt(physical.noise_density_dbm_hz) * physical.bandwidth_hz;
    }
    double rcs_linear() const { return db_to_linear(physical.rcs_db); }
    ArrayGeometry geometry() const { return ArrayGeometry(physical.num_antennas, spacing(), wavelength()); }
    double radar_gain_power() const {
        return SensingLink::gain_power(wavelength(), physical.tx_gain, physical.rx_gain, rcs_linear());
    }
    cdouble comm_gain_value() const { return comm_gain(wavelength(), physical.tx_gain, physical.rx_gain); }
    TargetState static_state() const {
        return {{target.range_m, deg_to_rad(target.angle_deg)}, {target.v_radial, target.v_transverse}};
    }
    Trajectory make_trajectory() const { return Trajectory(trajectory.waypoints, trajectory.speed); }
};

/// Default trajectory: a left-turning polyline, 2 m segments turning 3 degrees.
inline std::vector<Eigen::Vector2d> default_waypoints() {
    return turning_polyline({-8.0, 8.0}, 0.0, deg_to_rad(3.0), 2.0, 14);
}

/// f = 28 GHz, B = 100 kHz, N = 200, M = 512, lambda/2 spacing, G = 1,
/// RCS = -23 dB, N0 = -174 dBm/Hz. Transmit power is not part of the preset.
inline json paper_2024_preset() {
    json j;
    j["physical"] = {{"carrier_hz", 28e9},   {"bandwidth_hz", 1e5}, {"num_antennas", 512},
                     {"spacing", "half-wavelength"}, {"tx_gain", 1.0}, {"rx_gain", 1.0},
                     {"rcs_db", -23.0},      {"noise_density_dbm_hz", -174.0}};
    j["cpi"] = {{"symbols", 200}};
    j["target"] = {{"range_m", 10.0}, {"angle_deg", 60.0}, {"v_radial", 10.0}, {"v_transverse", 8.0}};
    j["trajectory"] = {{"speed", 20.0},
                       {"turning",
                        {{"start", {-8.0, 8.0}}, {"heading_deg", 0.0}, {"turn_deg", 3.0}, {"segment_m", 2.0},
                         {"segments", 14}}}};
    return j;
}

inline json preset_by_name(const std::string& name) {
    if (name == "paper-2024") return paper_2024_preset();
    throw ConfigError("preset: unknown preset '" + name + "'");
}

namespace detail {

/// Walks a JSON object and reports the dotted path of every problem.
class Reader {
public:
    Reader(const json& root, std::string path) : root_(root), path_(std::move(path)) {}

    bool has(const std::string& key) const { return root_.is_object() && root_.contains(key) && !root_[key].is_null(); }

    std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json& at(const std::string& key) const {
        if (!has(key)) throw ConfigError(where(key) + ": required field is missing");
        return root_[key];
    }

    double number(const std::string& key) const {
        const json& v = at(key);
        if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
        return v.get<double>();
    }

    double number_or(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

    double positive(const std::string& key) const {
        const double v = number(key);
        if (!(v > 0.0)) throw ConfigError(where(key) + ": must be positive");
        return v;
    }

    std::uint64_t unsigned_int(const std::string& key) const {
        const json& v = at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
            throw ConfigError(where(key) + ": expected a non-negative integer");
        return v.get<std::uint64_t>();
    }

    bool boolean_or(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        if (!root_[key].is_boolean()) throw ConfigError(where(key) + ": expected true/false");
        return root_[key].get<bool>();
    }

    std::string string(const std::string& key) const {
        const json& v = at(key);
        if (!v.is_string()) throw ConfigError(where(key) + ": expected a string");
        return v.get<std::string>();
    }

    std::vector<double> numbers(const std::string& key) const {
        const json& v = at(key);
        if (!v.is_array()) throw ConfigError(where(key) + ": expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) throw ConfigError(where(key) + "[" + std::to_string(i) + "]: expected a number");
            out.push_back(v[i].get<double>());
        }
        return out;
    }

    Reader section(const std::string& key) const {
        const json& v = at(key);
        if (!v.is_object()) throw ConfigError(where(key) + ": expected an object");
        return Reader(v, where(key));
    }

    const json& raw() const { return root_; }

private:
    const json& root_;
    std::string path_;
};

inline void merge_into(json& base, const json& overlay) {
    for (auto it = overlay.begin(); it != overlay.end(); ++it) {
        if (it.value().is_object() && base.contains(it.key()) && base[it.key()].is_object() &&
            it.key() != "trajectory") {
            merge_into(base[it.key()], it.value());
        } else {
            base[it.key()] = it.value();
        }
    }
}

inline AscentDirection parse_direction(const Reader& r, const std::string& key) {
    const std::string v = r.string(key);
    if (v == "gradient") return AscentDirection::gradient;
    if (v == "quasi-newton") return AscentDirection::quasi_newton;
    throw ConfigError(r.where(key) + ": expected \"gradient\" or \"quasi-newton\"");
}

} // namespace detail

/// Applies the preset named in the document (if any) underneath it.
inline json resolve_presets(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config: top level must be an object");
    if (!doc.contains("preset") || doc["preset"].is_null()) return doc;
    if (!doc["preset"].is_string()) throw ConfigError("preset: expected a string");
    json merged = preset_by_name(doc["preset"].get<std::string>());
    merged["preset"] = doc["preset"];
    detail::merge_into(merged, doc);
    return merged;
}

/// Parses and validates a configuration document (presets already applied
/// or applied here).
inline ScenarioConfig parse_config(const json& input) {
    const json doc = resolve_presets(input);
    const detail::Reader root(doc, "");
    ScenarioConfig cfg;
    if (root.has("preset")) cfg.preset = root.string("preset");

    {
        const auto phys = root.section("physical");
        auto& p = cfg.physical;
        p.carrier_hz = phys.positive("carrier_hz");
        p.bandwidth_hz = phys.positive("bandwidth_hz");
        const auto m = phys.unsigned_int("num_antennas");
        if (m < 2) throw ConfigError(phys.where("num_antennas") + ": need at least 2 antennas");
        p.num_antennas = static_cast<std::size_t>(m);
        if (phys.has("spacing")) {
            const json& s = phys.at("spacing");
            if (s.is_string()) {
                if (s.get<std::string>() != "half-wavelength")
                    throw ConfigError(phys.where("spacing") + ": expected \"half-wavelength\" or metres");
            } else {
                p.spacing_m = phys.positive("spacing");
            }
        }
        p.tx_gain = phys.has("tx_gain") ? phys.positive("tx_gain") : 1.0;
        p.rx_gain = phys.has("rx_gain") ? phys.positive("rx_gain") : 1.0;
        p.rcs_db = phys.number("rcs_db");
        p.noise_density_dbm_hz = phys.number("noise_density_dbm_hz");
    }

    {
        const auto cpi = root.section("cpi");
        const auto n = cpi.unsigned_int("symbols");
        if (n < 1) throw ConfigError(cpi.where("symbols") + ": must be >= 1");
        cfg.symbols_per_cpi = static_cast<std::size_t>(n);
    }

    if (root.has("power")) {
        const auto pw = root.section("power");
        const bool dbm = pw.has("dbm");
        const bool watts = pw.has("watts");
        if (dbm == watts) throw ConfigError("power: give exactly one of dbm, watts");
        const std::string key = dbm ? "dbm" : "watts";
        std::vector<double> values = pw.at(key).is_array() ? pw.numbers(key) : std::vector<double>{pw.number(key)};
        for (double v : values) {
            const double w = dbm ? dbm_to_watt(v) : v;
            if (!(w > 0.0)) throw ConfigError(pw.where(key) + ": power must be positive");
            cfg.powers_w.push_back(w);
        }
    }

    if (root.has("target")) {
        const auto t = root.section("target");
        cfg.target.range_m = t.positive("range_m");
        cfg.target.angle_deg = t.number("angle_deg");
        if (!(cfg.target.angle_deg > 0.0 && cfg.target.angle_deg < 180.0))
            throw ConfigError(t.where("angle_deg") + ": must lie in (0, 180)");
        cfg.target.v_radial = t.number_or("v_radial", 0.0);
        cfg.target.v_transverse = t.number_or("v_transverse", 0.0);
    }

    if (root.has("trajectory")) {
        const auto tr = root.section("trajectory");
        cfg.trajectory.speed = tr.number("speed");
        if (cfg.trajectory.speed < 0.0) throw ConfigError(tr.where("speed") + ": must be >= 0");
        if (tr.has("waypoints")) {
            const json& w = tr.at("waypoints");
            if (!w.is_array() || w.empty()) throw ConfigError(tr.where("waypoints") + ": expected [[x, y], ...]");
            for (std::size_t i = 0; i < w.size(); ++i) {
                if (!w[i].is_array() || w[i].size() != 2 || !w[i][0].is_number() || !w[i][1].is_number())
                    throw ConfigError(tr.where("waypoints") + "[" + std::to_string(i) + "]: expected [x, y]");
                cfg.trajectory.waypoints.emplace_back(w[i][0].get<double>(), w[i][1].get<double>());
            }
        } else if (tr.has("turning")) {
            const auto t = tr.section("turning");
            const auto start = t.numbers("start");
            if (start.size() != 2) throw ConfigError(t.where("start") + ": expected [x, y]");
            cfg.trajectory.waypoints =
                turning_polyline({start[0], start[1]}, deg_to_rad(t.number("heading_deg")),
                                 deg_to_rad(t.number("turn_deg")), t.positive("segment_m"),
                                 static_cast<std::size_t>(t.unsigned_int("segments")));
        } else {
            throw ConfigError(tr.where("waypoints") + ": required field is missing (or give trajectory.turning)");
        }
        for (std::size_t i = 1; i < cfg.trajectory.waypoints.size(); ++i) {
            if ((cfg.trajectory.waypoints[i] - cfg.trajectory.waypoints[i - 1]).norm() == 0.0)
                throw ConfigError(tr.where("waypoints") + ": consecutive waypoints coincide");
        }
    } else {
        cfg.trajectory.waypoints = default_waypoints();
    }

    if (root.has("estimator")) {
        const auto e = root.section("estimator");
        auto& o = cfg.estimator;
        if (e.has("max_iters")) o.max_iters = static_cast<int>(e.unsigned_int("max_iters"));
        if (e.has("grad_tol")) o.grad_tol = e.positive("grad_tol");
        if (e.has("step_tol")) o.step_tol = e.positive("step_tol");
        if (e.has("direction")) o.direction = detail::parse_direction(e, "direction");
        if (e.has("line_search")) {
            const auto ls = e.section("line_search");
            o.line_search.shrink = ls.number_or("shrink", o.line_search.shrink);
            o.line_search.sufficient_increase = ls.number_or("sufficient_increase", o.line_search.sufficient_increase);
            o.line_search.initial_step = ls.number_or("initial_step", o.line_search.initial_step);
        }
        if (e.raw().contains("coarse_grid") && e.raw()["coarse_grid"].is_null()) {
            o.coarse_grid.reset();
        } else if (e.has("coarse_grid")) {
            const auto g = e.section("coarse_grid");
            o.coarse_grid = CoarseGrid{g.number_or("v_max", 30.0), static_cast<int>(g.number_or("points", 31))};
        } else {
            o.coarse_grid = CoarseGrid{};
        }
    } else {
        cfg.estimator.coarse_grid = CoarseGrid{};
    }
    try {
        cfg.estimator.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("estimator: ") + e.what());
    }

    if (root.has("experiment")) {
        const auto x = root.section("experiment");
        auto& e = cfg.experiment;
        if (x.has("distances_m")) e.distances_m = x.numbers("distances_m");
        for (double d : e.distances_m)
            if (!(d > 0.0)) throw ConfigError(x.where("distances_m") + ": distances must be positive");
        e.snr_db = x.number_or("snr_db", e.snr_db);
        e.slice_span = x.number_or("slice_span", e.slice_span);
        if (!(e.slice_span > 0.0)) throw ConfigError(x.where("slice_span") + ": must be positive");
        if (x.has("slice_points")) e.slice_points = static_cast<int>(x.unsigned_int("slice_points"));
        if (e.slice_points < 2) throw ConfigError(x.where("slice_points") + ": must be >= 2");
        if (x.has("num_cpis")) e.num_cpis = static_cast<std::size_t>(x.unsigned_int("num_cpis"));
        e.sensing_noise = x.boolean_or("sensing_noise", e.sensing_noise);
        e.inject_truth = x.boolean_or("inject_truth", e.inject_truth);
        if (x.has("initial_error")) {
            const auto ie = x.section("initial_error");
            e.initial_error_range_m = ie.number_or("range_m", 0.0);
            e.initial_error_angle_deg = ie.number_or("angle_deg", 0.0);
        }
    }

    if (root.has("seed")) cfg.seed = root.unsigned_int("seed");

    if (root.has("output")) {
        const auto o = root.section("output");
        if (o.has("directory")) cfg.output_dir = o.string("directory");
        if (o.has("formats")) {
            cfg.formats.clear();
            for (const auto& f : o.at("formats")) {
                if (!f.is_string() || f.get<std::string>() != "csv")
                    throw ConfigError(o.where("formats") + ": only \"csv\" is supported");
                cfg.formats.push_back("csv");
            }
        }
    }

    // Geometry invariants on the static target.
    try {
        check_position(cfg.static_state().position, cfg.geometry());
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("target: ") + e.what());
    }
    return cfg;
}

inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw ConfigError("config: '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(doc);
}

/// Canonical JSON form of a validated config (hashed into manifests).
inline json to_json(const ScenarioConfig& c) {
    json j;
    if (c.preset) j["preset"] = *c.preset;
    json phys = {{"carrier_hz", c.physical.carrier_hz},
                 {"bandwidth_hz", c.physical.bandwidth_hz},
                 {"num_antennas", c.physical.num_antennas},
                 {"tx_gain", c.physical.tx_gain},
                 {"rx_gain", c.physical.rx_gain},
                 {"rcs_db", c.physical.rcs_db},
                 {"noise_density_dbm_hz", c.physical.noise_density_dbm_hz}};
    if (c.physical.spacing_m) phys["spacing"] = *c.physical.spacing_m;
    else phys["spacing"] = "half-wavelength";
    j["physical"] = phys;
    j["cpi"] = {{"symbols", c.symbols_per_cpi}};
    if (!c.powers_w.empty()) j["power"] = {{"watts", c.powers_w}};
    j["target"] = {{"range_m", c.target.range_m},
                   {"angle_deg", c.target.angle_deg},
                   {"v_radial", c.target.v_radial},
                   {"v_transverse", c.target.v_transverse}};
    json wps = json::array();
    for (const auto& w : c.trajectory.waypoints) wps.push_back({w.x(), w.y()});
    j["trajectory"] = {{"speed", c.trajectory.speed}, {"waypoints", wps}};
    json est = {{"max_iters", c.estimator.max_iters},
                {"grad_tol", c.estimator.grad_tol},
                {"step_tol", c.estimator.step_tol},
                {"direction", c.estimator.direction == AscentDirection::gradient ? "gradient" : "quasi-newton"},
                {"line_search",
                 {{"shrink", c.estimator.line_search.shrink},
                  {"sufficient_increase", c.estimator.line_search.sufficient_increase},
                  {"initial_step", c.estimator.line_search.initial_step}}}};
    if (c.estimator.coarse_grid)
        est["coarse_grid"] = {{"v_max", c.estimator.coarse_grid->v_max}, {"points", c.estimator.coarse_grid->points}};
    else
        est["coarse_grid"] = nullptr;
    j["estimator"] = est;
    j["experiment"] = {{"distances_m", c.experiment.distances_m},
                       {"snr_db", c.experiment.snr_db},
                       {"slice_span", c.experiment.slice_span},
                       {"slice_points", c.experiment.slice_points},
                       {"num_cpis", c.experiment.num_cpis},
                       {"sensing_noise", c.experiment.sensing_noise},
                       {"inject_truth", c.experiment.inject_truth},
                       {"initial_error",
                        {{"range_m", c.experiment.initial_error_range_m},
                         {"angle_deg", c.experiment.initial_error_angle_deg}}}};
    j["seed"] = c.seed;
    j["output"] = {{"directory", c.output_dir}, {"formats", c.formats}};
    return j;
}

/// Quantities computed from the config, echoed into every manifest.
inline json derived_quantities(const ScenarioConfig& c) {
    const cdouble bc = c.comm_gain_value();
    return {{"wavelength_m", c.wavelength()},
            {"spacing_m", c.spacing()},
            {"symbol_period_s", c.symbol_period()},
            {"cpi_duration_s", c.cpi_duration()},
            {"noise_power_w", c.noise_power_w()},
            {"rcs_linear", c.rcs_linear()},
            {"radar_gain_power", c.radar_gain_power()},
            {"comm_gain", std::abs(bc)},
            {"half_aperture_m", c.geometry().half_aperture()}};
}

} // namespace nfvs::harness
