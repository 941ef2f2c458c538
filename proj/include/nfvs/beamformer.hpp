// SPDX-License-Identifier: Apache-2.0
//
// Predictive beamforming for a moving user: the transmit beam for CPI l is
// steered at the predicted position and pre-rotated by the conjugate Doppler of
// the velocity sensed in CPI l-1. The echoes of the same data frame are used
// to sense the velocity for the next prediction.
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <vector>

#include <Eigen/Core>

#include "nfvs/echo.hpp"
#include "nfvs/error.hpp"
#include "nfvs/estimator.hpp"
#include "nfvs/geometry.hpp"
#include "nfvs/trajectory.hpp"
#include "nfvs/units.hpp"

namespace nfvs {

struct BeamformerSpec {
    Position position;
    Velocity velocity;
    double power = 1.0; ///< W
    bool doppler_compensation = true;
};

/// w(n) = sqrt(rho) diag(d_n^*) a^*, rho = P / ||a||^2 so ||w(n)||^2 = P.
inline Eigen::VectorXcd make_beamformer(const BeamformerSpec& spec, const ArrayGeometry& geom, long n,
                                        double symbol_period) {
    detail::require(spec.power > 0.0, "make_beamformer: power must be positive");
    const Eigen::VectorXcd a = steering_vector(spec.position, geom);
    const double scale = std::sqrt(spec.power / a.squaredNorm());
    Eigen::VectorXcd w = scale * a.conjugate();
    if (spec.doppler_compensation) {
        const TargetState predicted{spec.position, spec.velocity};
        w = w.cwiseProduct(doppler_vector(predicted, geom, n, symbol_period).conjugate());
    }
    return w;
}

/// S(:, k) = w(n) c_n with n = k + 1.
inline Eigen::MatrixXcd transmit_frame(const BeamformerSpec& spec, const ArrayGeometry& geom,
                                       const Eigen::VectorXcd& symbols, double symbol_period) {
    detail::require(symbols.size() >= 1, "transmit_frame: need at least one symbol");
    for (Eigen::Index k = 0; k < symbols.size(); ++k) {
        detail::require(std::abs(std::abs(symbols[k]) - 1.0) < 1e-12, "transmit_frame: symbols must be unit-modulus");
    }
    Eigen::MatrixXcd S(static_cast<Eigen::Index>(geom.size()), symbols.size());
    for (Eigen::Index k = 0; k < symbols.size(); ++k) {
        S.col(k) = make_beamformer(spec, geom, static_cast<long>(k + 1), symbol_period) * symbols[k];
    }
    return S;
}

/// Unit-modulus QPSK symbols.
template <class Rng>
Eigen::VectorXcd qpsk_symbols(Eigen::Index count, Rng& rng) {
    std::uniform_int_distribution<int> pick(0, 3);
    Eigen::VectorXcd c(count);
    for (Eigen::Index k = 0; k < count; ++k) c[k] = std::polar(1.0, kPi / 4.0 + kPi / 2.0 * pick(rng));
    return c;
}

/// Per-symbol SNR |h^H(n) w(n)|^2 / sigma^2, with w(n) = S(:,k) / c_k.
inline Eigen::VectorXd per_symbol_snr(const TargetState& truth, const ArrayGeometry& geom, cdouble beta_c,
                                      const Eigen::MatrixXcd& transmit, const Eigen::VectorXcd& symbols,
                                      double noise_power, double symbol_period) {
    detail::require(noise_power > 0.0, "cpi_rate: noise power must be positive");
    detail::require(symbols.size() == transmit.cols(), "cpi_rate: one symbol per transmit column");
    const Eigen::VectorXcd a = steering_vector(truth.position, geom);
    const auto view = array_view(truth.position, geom);
    const Eigen::VectorXd speeds = detail::projected_speeds(view, truth.velocity);
    Eigen::VectorXd snr(transmit.cols());
    Eigen::VectorXcd h;
    for (Eigen::Index k = 0; k < transmit.cols(); ++k) {
        detail::modulated_response(a, speeds, geom.wavenumber(), symbol_time(k, symbol_period), h);
        const cdouble rx = beta_c * (h.transpose() * transmit.col(k))(0) / symbols[k];
        snr[k] = std::norm(rx) / noise_power;
    }
    return snr;
}

/// Average achievable rate over one CPI, bits/s/Hz.
inline double cpi_rate(const TargetState& truth, const ArrayGeometry& geom, cdouble beta_c,
                       const Eigen::MatrixXcd& transmit, const Eigen::VectorXcd& symbols, double noise_power,
                       double symbol_period) {
    const Eigen::VectorXd snr = per_symbol_snr(truth, geom, beta_c, transmit, symbols, noise_power, symbol_period);
    double sum = 0.0;
    for (Eigen::Index k = 0; k < snr.size(); ++k) sum += std::log2(1.0 + snr[k]);
    return sum / static_cast<double>(snr.size());
}

/// Everything the tracking loop needs, already in SI units.
struct TrackingScenario {
    ArrayGeometry geometry{2, 1.0, 1.0};
    std::size_t symbols_per_cpi = 200;
    double symbol_period = 1e-5;
    double power = 1e-3;    ///< W
    double tx_gain = 1.0;
    double rx_gain = 1.0;
    double rcs = 1.0;       ///< linear
    double noise_power = 0.0;      ///< sensing receiver, W
    double comm_noise_power = 0.0; ///< user receiver, W; 0 skips rate accounting
    Trajectory trajectory;
    std::size_t num_cpis = 0;     ///< 0: until the trajectory ends
    Position initial_error{0.0, 0.0}; ///< added to the true initial position
    EstimatorOptions estimator{};
    std::optional<CoarseGrid> first_cpi_grid = CoarseGrid{};
    bool inject_truth = false; ///< debug: beamform with the true state
    std::uint64_t seed = 0;

    double cpi_duration() const { return static_cast<double>(symbols_per_cpi) * symbol_period; }
};

struct CpiRecord {
    std::size_t index = 0;
    bool sensing_only = false;
    Position predicted;
    Velocity estimated;
    TargetState truth;
    double rate = 0.0;
    double rate_optimal = 0.0;
    double rate_no_dfc = 0.0;
    int iterations = 0;
    Termination termination = Termination::max_iters;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

} // namespace detail

/// Independent, reproducible stream for (seed, purpose, index).
inline std::mt19937_64 derive_stream(std::uint64_t seed, std::uint64_t purpose, std::uint64_t index) {
    const std::uint64_t s = detail::splitmix64(detail::splitmix64(detail::splitmix64(seed) ^ purpose) ^ index);
    return std::mt19937_64(s);
}

namespace stream {
inline constexpr std::uint64_t symbols = 0x53594d42ull;
inline constexpr std::uint64_t sensing_noise = 0x4e4f4953ull;
inline constexpr std::uint64_t gain_phase = 0x50484153ull;
} // namespace stream

/// Runs the sense / predict / beamform loop. CPI 0 is sensing-only.
inline std::vector<CpiRecord> run_tracking(const TrackingScenario& sc) {
    const ArrayGeometry& geom = sc.geometry;
    const double dt = sc.cpi_duration();
    const auto N = static_cast<Eigen::Index>(sc.symbols_per_cpi);
    detail::require(N >= 1, "run_tracking: symbols_per_cpi must be >= 1");
    detail::require(sc.power > 0.0, "run_tracking: power must be positive");
    detail::require(sc.noise_power >= 0.0 && sc.comm_noise_power >= 0.0, "run_tracking: noise power must be >= 0");
    const double rate_noise = sc.comm_noise_power;
    const cdouble beta_c = comm_gain(geom.wavelength(), sc.tx_gain, sc.rx_gain);

    std::size_t cpis = sc.num_cpis;
    const std::size_t available = sc.trajectory.cpi_count(dt);
    detail::require(cpis > 0 || !sc.trajectory.is_stationary(), "run_tracking: stationary user needs num_cpis");
    if (cpis == 0 || cpis > available) cpis = available;

    std::vector<CpiRecord> records;
    records.reserve(cpis);

    auto truth_at = [&](std::size_t l) {
        const auto kin = sc.trajectory.at(static_cast<double>(l) * dt);
        const Position p = to_polar(kin.position);
        return TargetState{p, polar_velocity(p, kin.velocity)};
    };

    Position predicted = truth_at(0).position;
    predicted.range += sc.initial_error.range;
    predicted.angle += sc.initial_error.angle;
    Velocity previous{};

    for (std::size_t l = 0; l < cpis; ++l) {
        const TargetState truth = truth_at(l);
        check_position(truth.position, geom);
        auto sym_rng = derive_stream(sc.seed, stream::symbols, l);
        const Eigen::VectorXcd symbols = qpsk_symbols(N, sym_rng);

        CpiRecord rec;
        rec.index = l;
        rec.truth = truth;
        rec.predicted = predicted;
        rec.sensing_only = (l == 0);

        BeamformerSpec spec{predicted, previous, sc.power, l > 0};
        if (sc.inject_truth) spec = {truth.position, truth.velocity, sc.power, true};
        const Eigen::MatrixXcd S = transmit_frame(spec, geom, symbols, sc.symbol_period);

        if (l > 0 && rate_noise > 0.0) {
            rec.rate = cpi_rate(truth, geom, beta_c, S, symbols, rate_noise, sc.symbol_period);
            const BeamformerSpec opt{truth.position, truth.velocity, sc.power, true};
            rec.rate_optimal = cpi_rate(truth, geom, beta_c, transmit_frame(opt, geom, symbols, sc.symbol_period),
                                        symbols, rate_noise, sc.symbol_period);
            const BeamformerSpec plain{predicted, {}, sc.power, false};
            rec.rate_no_dfc = cpi_rate(truth, geom, beta_c, transmit_frame(plain, geom, symbols, sc.symbol_period),
                                       symbols, rate_noise, sc.symbol_period);
        }

        auto phase_rng = derive_stream(sc.seed, stream::gain_phase, l);
        std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
        const SensingLink link =
            SensingLink::from_radar_equation(geom.wavelength(), sc.tx_gain, sc.rx_gain, sc.rcs, sc.noise_power,
                                             phase(phase_rng));
        auto noise_rng = derive_stream(sc.seed, stream::sensing_noise, l);
        const EchoFrame frame = generate_echo(truth, geom, link, S, sc.symbol_period, noise_rng);

        EstimatorOptions opts = sc.estimator;
        opts.init = previous;
        opts.coarse_grid = (l == 0) ? sc.first_cpi_grid : std::nullopt;
        EstimateResult est;
        try {
            est = estimate_velocity(frame, geom, predicted, opts);
        } catch (const Error& e) {
            std::ostringstream os;
            os << "CPI " << l << ": " << e.what();
            throw NumericalFailure(os.str());
        }
        rec.estimated = est.velocity;
        rec.iterations = est.iterations;
        rec.termination = est.termination;
        records.push_back(rec);

        previous = est.velocity;
        if (l + 1 < cpis) {
            try {
                predicted = propagate_state(predicted, previous, dt, geom);
            } catch (const InvalidArgument& e) {
                std::ostringstream os;
                os << "CPI " << l << ": predicted state left the valid region: " << e.what();
                throw InvalidArgument(os.str());
            }
        }
    }
    return records;
}

} // namespace nfvs
