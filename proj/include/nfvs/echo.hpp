// SPDX-License-Identifier: Apache-2.0
//
// Mono-static echo synthesis and the one-way communication channel.
//
// Time convention: column k (0-based) of a CPI matrix is the symbol at time
// index n = k + 1, i.e. elapsed time (k + 1) * Ts from the CPI reference.
#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <random>

#include <Eigen/Core>

#include "nfvs/error.hpp"
#include "nfvs/geometry.hpp"
#include "nfvs/units.hpp"

namespace nfvs {

using cdouble = std::complex<double>;

inline double symbol_time(Eigen::Index column, double symbol_period) {
    return static_cast<double>(column + 1) * symbol_period;
}

/// Gain and noise of the sensing link. |beta|^2 follows the radar range
/// equation; the phase is free.
struct SensingLink {
    cdouble beta{0.0, 0.0};
    double noise_power = 0.0; ///< per-entry complex noise variance, W

    /// |beta|^2 = Gt Gr lambda^2 rcs / (4 pi)^3
    static double gain_power(double wavelength, double tx_gain, double rx_gain, double rcs) {
        return tx_gain * rx_gain * wavelength * wavelength * rcs / std::pow(4.0 * kPi, 3);
    }

    static SensingLink from_radar_equation(double wavelength, double tx_gain, double rx_gain, double rcs,
                                           double noise_power, double phase = 0.0) {
        detail::require(tx_gain > 0.0 && rx_gain > 0.0 && rcs > 0.0, "SensingLink: gains and RCS must be positive");
        detail::require(noise_power >= 0.0, "SensingLink: noise power must be non-negative");
        return {std::polar(std::sqrt(gain_power(wavelength, tx_gain, rx_gain, rcs)), phase), noise_power};
    }
};

/// One CPI: received echoes Y and the transmit matrix S, both M x N.
struct EchoFrame {
    Eigen::MatrixXcd received;
    Eigen::MatrixXcd transmit;
    double symbol_period = 0.0;

    Eigen::Index num_symbols() const { return transmit.cols(); }
};

/// Near-field array response: a_m = exp(-j 2 pi r_m / lambda) / r_m.
inline Eigen::VectorXcd steering_vector(const Position& p, const ArrayGeometry& geom) {
    check_position(p, geom);
    const auto M = static_cast<Eigen::Index>(geom.size());
    const double k = geom.wavenumber();
    Eigen::VectorXcd a(M);
    for (Eigen::Index m = 0; m < M; ++m) {
        const double rm = per_antenna_distance(p, geom, static_cast<std::size_t>(m));
        a[m] = std::polar(1.0 / rm, -k * rm);
    }
    return a;
}

/// Doppler vector at time index n (elapsed time n * Ts).
inline Eigen::VectorXcd doppler_vector(const TargetState& s, const ArrayGeometry& geom, long n, double symbol_period) {
    detail::require(n >= 0, "doppler_vector: time index must be non-negative");
    check_position(s.position, geom);
    const auto M = static_cast<Eigen::Index>(geom.size());
    const double phase_per_speed = -geom.wavenumber() * static_cast<double>(n) * symbol_period;
    Eigen::VectorXcd d(M);
    for (Eigen::Index m = 0; m < M; ++m) {
        const double vm = velocity_projection(s, geom, static_cast<std::size_t>(m)).speed;
        d[m] = std::polar(1.0, phase_per_speed * vm);
    }
    return d;
}

namespace detail {

/// Per-antenna line-of-sight speeds v_m for a velocity at a fixed view.
inline Eigen::VectorXd projected_speeds(const ArrayView& view, const Velocity& v) {
    return view.radial_weight * v.radial + view.transverse_weight * v.transverse;
}

/// u = a (.) d at elapsed time t, given precomputed v_m.
inline void modulated_response(const Eigen::VectorXcd& a, const Eigen::VectorXd& speeds, double wavenumber, double t,
                               Eigen::VectorXcd& out) {
    const double c = -wavenumber * t;
    out.resize(a.size());
    for (Eigen::Index m = 0; m < a.size(); ++m) out[m] = a[m] * std::polar(1.0, c * speeds[m]);
}

} // namespace detail

/// Noise-free echo for one symbol: beta * (a.d)(a.d)^T s. H_n = A (.) D_n is
/// rank one, so the M x M matrix is never formed.
inline Eigen::VectorXcd echo_column(const TargetState& s, const ArrayGeometry& geom, const SensingLink& link,
                                    const Eigen::VectorXcd& sn, long n, double symbol_period) {
    detail::require(sn.size() == static_cast<Eigen::Index>(geom.size()), "echo_column: signal length != M");
    const Eigen::VectorXcd u = steering_vector(s.position, geom).cwiseProduct(doppler_vector(s, geom, n, symbol_period));
    const cdouble projection = (u.transpose() * sn)(0);
    return link.beta * projection * u;
}

/// Noise-free model matrix X(eta, v) for transmit matrix S (no beta).
inline Eigen::MatrixXcd model_matrix(const Position& p, const Velocity& v, const ArrayGeometry& geom,
                                     const Eigen::MatrixXcd& transmit, double symbol_period) {
    const auto view = array_view(p, geom);
    const Eigen::VectorXcd a = steering_vector(p, geom);
    const Eigen::VectorXd speeds = detail::projected_speeds(view, v);
    Eigen::MatrixXcd X(transmit.rows(), transmit.cols());
    Eigen::VectorXcd u;
    for (Eigen::Index k = 0; k < transmit.cols(); ++k) {
        detail::modulated_response(a, speeds, geom.wavenumber(), symbol_time(k, symbol_period), u);
        X.col(k) = u * (u.transpose() * transmit.col(k))(0);
    }
    return X;
}

/// Circular complex Gaussian noise, variance `power` per entry.
template <class Rng>
Eigen::MatrixXcd complex_gaussian(Eigen::Index rows, Eigen::Index cols, double power, Rng& rng) {
    Eigen::MatrixXcd Z(rows, cols);
    if (power == 0.0) {
        Z.setZero();
        return Z;
    }
    std::normal_distribution<double> normal(0.0, std::sqrt(power / 2.0));
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) {
            const double re = normal(rng);
            const double im = normal(rng);
            Z(r, c) = {re, im};
        }
    return Z;
}

/// Y = beta X + Z over one CPI.
template <class Rng>
EchoFrame generate_echo(const TargetState& s, const ArrayGeometry& geom, const SensingLink& link,
                        const Eigen::MatrixXcd& transmit, double symbol_period, Rng& rng) {
    detail::require(transmit.rows() == static_cast<Eigen::Index>(geom.size()), "generate_echo: S must have M rows");
    detail::require(transmit.cols() >= 1, "generate_echo: S must have at least one column");
    detail::require(symbol_period > 0.0, "generate_echo: symbol period must be positive");
    check_position(s.position, geom);
    EchoFrame frame;
    frame.transmit = transmit;
    frame.symbol_period = symbol_period;
    frame.received = link.beta * model_matrix(s.position, s.velocity, geom, transmit, symbol_period);
    frame.received += complex_gaussian(transmit.rows(), transmit.cols(), link.noise_power, rng);
    return frame;
}

/// Free-space one-way amplitude used for the communication link.
inline cdouble comm_gain(double wavelength, double tx_gain, double rx_gain) {
    return {wavelength * std::sqrt(tx_gain * rx_gain) / (4.0 * kPi), 0.0};
}

/// Returns the row h^H = beta_c a^T diag(d_n) as a column vector; the user
/// receives h.transpose() * s (no further conjugation).
inline Eigen::VectorXcd comm_channel(const TargetState& s, const ArrayGeometry& geom, cdouble beta_c, long n,
                                     double symbol_period) {
    return beta_c * steering_vector(s.position, geom).cwiseProduct(doppler_vector(s, geom, n, symbol_period));
}

} // namespace nfvs
