// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "nfvs/harness/config.hpp"
#include "nfvs/harness/experiments.hpp"
#include "nfvs/harness/monte_carlo.hpp"
#include "nfvs/harness/output.hpp"

using namespace nfvs;
using namespace nfvs::harness;

namespace {

// A reduced scenario that runs in milliseconds.
json small_doc() {
    return json::parse(R"({
        "physical": {"carrier_hz": 28e9, "bandwidth_hz": 1e5, "num_antennas": 64,
                     "rcs_db": -23, "noise_density_dbm_hz": -174},
        "cpi": {"symbols": 40},
        "power": {"dbm": [0, 10]},
        "target": {"range_m": 3, "angle_deg": 70, "v_radial": 4, "v_transverse": -3},
        "trajectory": {"speed": 20, "turning": {"start": [-1, 4], "heading_deg": 0, "turn_deg": 1,
                                                "segment_m": 0.08, "segments": 3}},
        "experiment": {"distances_m": [3, 6], "slice_points": 21},
        "seed": 5
    })");
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("nfvs_test_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

} // namespace

TEST(Config, PresetDerivedQuantities) {
    const auto cfg = parse_config(json{{"preset", "paper-2024"}});
    EXPECT_DOUBLE_EQ(cfg.symbol_period(), 1e-5);
    EXPECT_NEAR(cfg.cpi_duration(), 2e-3, 1e-15);
    EXPECT_EQ(cfg.geometry().size(), 512u);
    EXPECT_NEAR(cfg.wavelength(), 0.0107068, 1e-7);
    EXPECT_NEAR(cfg.spacing(), cfg.wavelength() / 2, 1e-15);
    EXPECT_NEAR(cfg.rcs_linear(), 5.012e-3, 1e-6);
    EXPECT_NEAR(cfg.noise_power_w(), 3.981e-16, 0.001e-16);
    EXPECT_NEAR(cfg.radar_gain_power(), 2.90e-10, 0.01e-10);
    EXPECT_TRUE(cfg.powers_w.empty());
    ASSERT_TRUE(cfg.estimator.coarse_grid.has_value());
}

TEST(Config, OverlayReplacesPresetFields) {
    const auto cfg = parse_config(json::parse(R"({"preset": "paper-2024", "physical": {"num_antennas": 128},
                                                  "power": {"watts": 0.5}, "seed": 9})"));
    EXPECT_EQ(cfg.physical.num_antennas, 128u);
    EXPECT_DOUBLE_EQ(cfg.physical.carrier_hz, 28e9);
    ASSERT_EQ(cfg.powers_w.size(), 1u);
    EXPECT_DOUBLE_EQ(cfg.powers_w[0], 0.5);
    EXPECT_EQ(cfg.seed, 9u);
}

TEST(Config, MissingFieldIsNamed) {
    auto doc = small_doc();
    doc["physical"].erase("bandwidth_hz");
    try {
        parse_config(doc);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("physical.bandwidth_hz"), std::string::npos) << e.what();
    }
}

TEST(Config, RejectsInvalidValues) {
    auto bad = [](const char* patch) {
        auto doc = small_doc();
        doc.merge_patch(json::parse(patch));
        EXPECT_THROW(parse_config(doc), ConfigError) << patch;
    };
    bad(R"({"physical": {"num_antennas": 1}})");
    bad(R"({"physical": {"carrier_hz": -1}})");
    bad(R"({"physical": {"spacing": "quarter"}})");
    bad(R"({"target": {"angle_deg": 180}})");
    bad(R"({"target": {"range_m": 0.1}})");
    bad(R"({"power": {"dbm": 0, "watts": 1}})");
    bad(R"({"estimator": {"line_search": {"shrink": 2}}})");
    bad(R"({"preset": "nope"})");
    bad(R"({"output": {"formats": ["parquet"]}})");
    EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Config, NullGridDisablesSeeding) {
    auto doc = small_doc();
    doc["estimator"] = json::parse(R"({"coarse_grid": null, "direction": "gradient"})");
    const auto cfg = parse_config(doc);
    EXPECT_FALSE(cfg.estimator.coarse_grid.has_value());
    EXPECT_EQ(cfg.estimator.direction, AscentDirection::gradient);
}

TEST(Config, CanonicalFormRoundTrips) {
    const auto cfg = parse_config(small_doc());
    const json canon = to_json(cfg);
    EXPECT_EQ(to_json(parse_config(canon)), canon);
}

TEST(Output, NumbersKeepFullPrecision) {
    const double x = 0.1 + 0.2;
    EXPECT_EQ(std::stod(format_real(x)), x);
    EXPECT_EQ(format_real(1.0), "1");
}

TEST(Output, CsvQuoting) {
    EXPECT_EQ(csv_escape("plain"), "plain");
    EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
    EXPECT_EQ(csv_escape("two\nlines"), "\"two\nlines\"");
    CsvTable t({"name", "value"});
    t.add_row({std::string("x,y"), 2.5});
    t.add_row({std::string("z"), 7LL});
    EXPECT_EQ(t.str(), "name,value\r\n\"x,y\",2.5\r\nz,7\r\n");
    EXPECT_THROW(t.add_row({1.0}), InvalidArgument);
}

TEST(Output, HashIsStable) {
    EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
    EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}

TEST(Overrides, ReplaceConfigValues) {
    auto cfg = parse_config(small_doc());
    Overrides o;
    o.powers_dbm = std::vector<double>{30.0};
    o.seed = 77;
    o.noise_free = true;
    o.distances_m = std::vector<double>{5.0};
    apply_overrides(cfg, o);
    ASSERT_EQ(cfg.powers_w.size(), 1u);
    EXPECT_NEAR(cfg.powers_w[0], 1.0, 1e-12);
    EXPECT_EQ(cfg.seed, 77u);
    EXPECT_FALSE(cfg.experiment.sensing_noise);
    EXPECT_EQ(cfg.experiment.distances_m, std::vector<double>{5.0});
    o = {};
    o.distances_m = std::vector<double>{-1.0};
    EXPECT_THROW(apply_overrides(cfg, o), ConfigError);
}

TEST(Experiments, EqualSnrPowerHitsTarget) {
    const auto cfg = parse_config(small_doc());
    for (double r : {3.0, 6.0, 12.0}) {
        const TargetState truth{{r, deg_to_rad(70.0)}, {4.0, -3.0}};
        const double p = equal_snr_power(cfg, truth, -10.0);
        EXPECT_NEAR(linear_to_db(receive_snr(cfg, truth, p)), -10.0, 1e-9);
    }
}

TEST(Experiments, PowerIsRequiredWhereUsed) {
    auto doc = small_doc();
    doc.erase("power");
    const auto cfg = parse_config(doc);
    EXPECT_THROW(run_experiment("convergence", cfg), ConfigError);
    EXPECT_THROW(run_experiment("track", cfg), ConfigError);
    EXPECT_THROW(run_experiment("rate-curve", cfg), ConfigError);
    EXPECT_NO_THROW(run_experiment("ml-map", cfg));
    EXPECT_THROW(run_experiment("bogus", cfg), ConfigError);
}

TEST(Experiments, EveryRecipeProducesRows) {
    const auto cfg = parse_config(small_doc());
    const auto map = run_experiment("ml-map", cfg);
    EXPECT_EQ(map.tables.at("radial").size(), 2u * 21u);
    EXPECT_EQ(map.tables.at("powers").size(), 2u);
    const auto conv = run_experiment("convergence", cfg);
    EXPECT_GT(conv.tables.at("trace").size(), 2u);
    const auto track = run_experiment("track", cfg);
    EXPECT_EQ(track.tables.at("track").size(), 2u * 30u);
    const auto rate = run_experiment("rate-curve", cfg);
    EXPECT_EQ(rate.tables.at("rate").size(), 2u * 30u);
}

TEST(Experiments, WrittenOutputIsByteIdenticalAcrossRuns) {
    auto cfg = parse_config(small_doc());
    const auto a = scratch("a"), b = scratch("b");
    cfg.output_dir = a.string();
    write_result(cfg, run_experiment("track", cfg));
    cfg.output_dir = b.string();
    write_result(cfg, run_experiment("track", cfg));
    EXPECT_EQ(slurp(a / "track" / "track.csv"), slurp(b / "track" / "track.csv"));
    const json ma = json::parse(slurp(a / "track" / "manifest.json"));
    const json mb = json::parse(slurp(b / "track" / "manifest.json"));
    EXPECT_EQ(ma["config_hash"], mb["config_hash"]);
    EXPECT_EQ(ma["seed"], 5);
    EXPECT_EQ(ma["files"], json::array({"track.csv"}));
    EXPECT_NE(ma["config_hash"], fnv1a_hex(""));
    const std::string csv = slurp(a / "track" / "track.csv");
    EXPECT_NE(csv.find("\r\n"), std::string::npos);
}

TEST(Experiments, SeedChangesNoisyOutput) {
    auto cfg = parse_config(small_doc());
    const auto first = run_experiment("convergence", cfg).tables.at("trace").str();
    cfg.seed = 6;
    EXPECT_NE(run_experiment("convergence", cfg).tables.at("trace").str(), first);
}

TEST(MonteCarlo, SingleTrialMatchesSingleRun) {
    const auto cfg = parse_config(small_doc());
    EXPECT_EQ(trial_seed(cfg.seed, 0), cfg.seed);
    const auto mc = monte_carlo("convergence", cfg, 1);
    ASSERT_EQ(mc.trials.size(), 2u);
    const auto truth = cfg.static_state();
    for (std::size_t p = 0; p < 2; ++p) {
        const auto frame = sensing_frame(cfg, truth, cfg.powers_w[p], cfg.seed, p);
        const auto est = estimate_velocity(frame, cfg.geometry(), truth.position, cfg.estimator);
        EXPECT_EQ(mc.trials[p].sq_err_radial, std::pow(est.velocity.radial - truth.velocity.radial, 2));
        EXPECT_EQ(mc.trials[p].iterations, est.iterations);
    }
}

TEST(MonteCarlo, MoreTrialsKeepThePrefix) {
    const auto cfg = parse_config(small_doc());
    const auto few = monte_carlo("track", cfg, 2);
    const auto many = monte_carlo("track", cfg, 4, 2);
    for (std::size_t p = 0; p < 2; ++p)
        for (std::size_t t = 0; t < 2; ++t) {
            const auto& a = few.trials[p * 2 + t];
            const auto& b = many.trials[p * 4 + t];
            EXPECT_EQ(a.seed, b.seed);
            EXPECT_EQ(a.sq_err_position, b.sq_err_position);
            EXPECT_EQ(a.rate, b.rate);
        }
}

TEST(MonteCarlo, ThreadCountDoesNotChangeResults) {
    const auto cfg = parse_config(small_doc());
    const auto one = monte_carlo_tables(monte_carlo("convergence", cfg, 3, 1));
    const auto three = monte_carlo_tables(monte_carlo("convergence", cfg, 3, 3));
    EXPECT_EQ(one.tables.at("trials").str(), three.tables.at("trials").str());
    EXPECT_EQ(one.tables.at("summary").str(), three.tables.at("summary").str());
}

TEST(MonteCarlo, RejectsUnsupportedExperiment) {
    const auto cfg = parse_config(small_doc());
    EXPECT_THROW(monte_carlo("ml-map", cfg, 1), ConfigError);
    EXPECT_THROW(monte_carlo("track", cfg, 0), InvalidArgument);
}
