// SPDX-License-Identifier: Apache-2.0
//
// Monte-Carlo repetition of the convergence (single static CPI) and track
// recipes. Trial i runs with seed master + i * golden, so trial 0 reproduces
// the plain experiment and extending the trial count never changes earlier
// trials. Results are stored by (power, trial) index, so the aggregate does
// not depend on which worker finished first.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "nfvs/beamformer.hpp"
#include "nfvs/estimator.hpp"
#include "nfvs/harness/config.hpp"
#include "nfvs/harness/experiments.hpp"
#include "nfvs/harness/output.hpp"

namespace nfvs::harness {

inline std::uint64_t trial_seed(std::uint64_t master, std::uint64_t trial) {
    return master + trial * 0x9E3779B97F4A7C15ull;
}

/// Outcome of one trial at one power.
struct TrialOutcome {
    double power_w = 0.0;
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    double sq_err_radial = 0.0;     ///< mean over CPIs (one CPI for convergence)
    double sq_err_transverse = 0.0;
    double sq_err_position = 0.0;
    double rate = 0.0;
    double rate_optimal = 0.0;
    double rate_no_dfc = 0.0;
    int iterations = 0;
};

struct PowerSummary {
    double power_w = 0.0;
    std::size_t trials = 0;
    double rmse_radial = 0.0;
    double rmse_transverse = 0.0;
    double rmse_position = 0.0;
    double rate_mean = 0.0;
    double rate_std = 0.0;
    double rate_optimal_mean = 0.0;
    double rate_no_dfc_mean = 0.0;
    double rate_no_dfc_std = 0.0;
};

struct MonteCarloResult {
    std::string experiment;
    std::vector<TrialOutcome> trials; ///< power-major, trial-minor
    std::vector<PowerSummary> summary;
};

inline TrialOutcome run_trial(const std::string& experiment, const ScenarioConfig& cfg, std::size_t power_index,
                              std::size_t trial) {
    TrialOutcome out;
    out.power_w = cfg.powers_w[power_index];
    out.trial = trial;
    out.seed = trial_seed(cfg.seed, trial);
    if (experiment == "convergence") {
        const TargetState truth = cfg.static_state();
        // same stream index as run_convergence, so trial 0 matches it exactly
        const EchoFrame frame = sensing_frame(cfg, truth, out.power_w, out.seed, power_index);
        const EstimateResult est = estimate_velocity(frame, cfg.geometry(), truth.position, cfg.estimator);
        out.sq_err_radial = std::pow(est.velocity.radial - truth.velocity.radial, 2);
        out.sq_err_transverse = std::pow(est.velocity.transverse - truth.velocity.transverse, 2);
        out.iterations = est.iterations;
        return out;
    }
    if (experiment == "track") {
        const auto records = run_tracking(tracking_scenario(cfg, out.power_w, out.seed));
        std::size_t data = 0;
        for (const auto& rec : records) {
            out.sq_err_radial += std::pow(rec.estimated.radial - rec.truth.velocity.radial, 2);
            out.sq_err_transverse += std::pow(rec.estimated.transverse - rec.truth.velocity.transverse, 2);
            out.sq_err_position +=
                (to_cartesian(rec.predicted) - to_cartesian(rec.truth.position)).squaredNorm();
            out.iterations += rec.iterations;
            if (!rec.sensing_only) {
                out.rate += rec.rate;
                out.rate_optimal += rec.rate_optimal;
                out.rate_no_dfc += rec.rate_no_dfc;
                ++data;
            }
        }
        const double n = static_cast<double>(std::max<std::size_t>(records.size(), 1));
        out.sq_err_radial /= n;
        out.sq_err_transverse /= n;
        out.sq_err_position /= n;
        if (data > 0) {
            out.rate /= static_cast<double>(data);
            out.rate_optimal /= static_cast<double>(data);
            out.rate_no_dfc /= static_cast<double>(data);
        }
        return out;
    }
    throw ConfigError("monte-carlo: experiment must be 'convergence' or 'track', got '" + experiment + "'");
}

inline MonteCarloResult monte_carlo(const std::string& experiment, const ScenarioConfig& cfg, std::size_t trials,
                                    unsigned threads = 1) {
    nfvs::detail::require(trials >= 1, "monte_carlo: trials must be >= 1");
    require_powers(cfg, "monte-carlo");
    if (experiment != "convergence" && experiment != "track")
        throw ConfigError("monte-carlo: experiment must be 'convergence' or 'track', got '" + experiment + "'");

    const std::size_t jobs = cfg.powers_w.size() * trials;
    MonteCarloResult result{experiment, std::vector<TrialOutcome>(jobs), {}};
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        for (std::size_t job = next++; job < jobs; job = next++) {
            try {
                result.trials[job] = run_trial(experiment, cfg, job / trials, job % trials);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(jobs)));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    for (std::size_t p = 0; p < cfg.powers_w.size(); ++p) {
        PowerSummary s;
        s.power_w = cfg.powers_w[p];
        s.trials = trials;
        double er = 0, et = 0, ep = 0, r = 0, r2 = 0, ro = 0, rn = 0, rn2 = 0;
        for (std::size_t t = 0; t < trials; ++t) {
            const auto& o = result.trials[p * trials + t];
            er += o.sq_err_radial;
            et += o.sq_err_transverse;
            ep += o.sq_err_position;
            r += o.rate;
            r2 += o.rate * o.rate;
            ro += o.rate_optimal;
            rn += o.rate_no_dfc;
            rn2 += o.rate_no_dfc * o.rate_no_dfc;
        }
        const double n = static_cast<double>(trials);
        s.rmse_radial = std::sqrt(er / n);
        s.rmse_transverse = std::sqrt(et / n);
        s.rmse_position = std::sqrt(ep / n);
        s.rate_mean = r / n;
        s.rate_std = std::sqrt(std::max(0.0, r2 / n - s.rate_mean * s.rate_mean));
        s.rate_optimal_mean = ro / n;
        s.rate_no_dfc_mean = rn / n;
        s.rate_no_dfc_std = std::sqrt(std::max(0.0, rn2 / n - s.rate_no_dfc_mean * s.rate_no_dfc_mean));
        result.summary.push_back(s);
    }
    return result;
}

inline ExperimentResult monte_carlo_tables(const MonteCarloResult& mc) {
    ExperimentResult r{"monte-carlo", {}, {}};
    CsvTable trials({"power_dbm", "trial", "seed", "sq_err_radial", "sq_err_transverse", "sq_err_position", "rate",
                     "rate_optimal", "rate_no_dfc", "iterations"});
    for (const auto& o : mc.trials) {
        trials.add_row({watt_to_dbm(o.power_w), static_cast<long long>(o.trial), std::to_string(o.seed),
                        o.sq_err_radial, o.sq_err_transverse, o.sq_err_position, o.rate, o.rate_optimal,
                        o.rate_no_dfc, static_cast<long long>(o.iterations)});
    }
    CsvTable summary({"power_dbm", "trials", "rmse_radial", "rmse_transverse", "rmse_position", "rate_mean",
                      "rate_std", "rate_optimal_mean", "rate_no_dfc_mean", "rate_no_dfc_std"});
    for (const auto& s : mc.summary) {
        summary.add_row({watt_to_dbm(s.power_w), static_cast<long long>(s.trials), s.rmse_radial, s.rmse_transverse,
                         s.rmse_position, s.rate_mean, s.rate_std, s.rate_optimal_mean, s.rate_no_dfc_mean,
                         s.rate_no_dfc_std});
    }
    r.tables.emplace("trials", std::move(trials));
    r.tables.emplace("summary", std::move(summary));
    r.extra["experiment"] = mc.experiment;
    return r;
}

} // namespace nfvs::harness
