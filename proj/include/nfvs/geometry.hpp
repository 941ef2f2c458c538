// SPDX-License-Identifier: Apache-2.0
//
// Array layout and target kinematics for a uniform linear array placed on the
// x-axis with its center at the origin. A target at polar position (r, theta)
// sits at (r cos theta, r sin theta). Antenna indices are 0-based here; the
// offset of antenna m is m - (M - 1) / 2.
#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>

#include <Eigen/Core>

#include "nfvs/error.hpp"
#include "nfvs/units.hpp"

namespace nfvs {

/// Polar position relative to the array center. theta in radians, (0, pi).
struct Position {
    double range = 0.0;
    double angle = 0.0;

    friend bool operator==(const Position&, const Position&) = default;
};

/// Radial (along the line of sight from the array center) and transverse
/// (perpendicular, in the direction of increasing angle) velocity in m/s.
struct Velocity {
    double radial = 0.0;
    double transverse = 0.0;

    friend bool operator==(const Velocity&, const Velocity&) = default;
};

struct TargetState {
    Position position;
    Velocity velocity;
};

class ArrayGeometry {
public:
    ArrayGeometry(std::size_t num_antennas, double spacing, double wavelength)
        : num_antennas_(num_antennas), spacing_(spacing), wavelength_(wavelength) {
        detail::require(num_antennas >= 2, "ArrayGeometry: need at least 2 antennas");
        detail::require(spacing > 0.0 && std::isfinite(spacing), "ArrayGeometry: spacing must be positive");
        detail::require(wavelength > 0.0 && std::isfinite(wavelength),
                        "ArrayGeometry: wavelength must be positive");
    }

    /// Half-wavelength ULA for the given carrier.
    static ArrayGeometry half_wavelength(std::size_t num_antennas, double carrier_hz) {
        const double lambda = wavelength_for(carrier_hz);
        return ArrayGeometry(num_antennas, lambda / 2.0, lambda);
    }

    std::size_t size() const { return num_antennas_; }
    double spacing() const { return spacing_; }
    double wavelength() const { return wavelength_; }
    double wavenumber() const { return 2.0 * kPi / wavelength_; }

    /// delta_m for 0-based index m.
    double offset(std::size_t m) const {
        return static_cast<double>(m) - (static_cast<double>(num_antennas_) - 1.0) / 2.0;
    }

    /// Largest |delta_m| * d, i.e. half the aperture.
    double half_aperture() const { return offset(num_antennas_ - 1) * spacing_; }

private:
    std::size_t num_antennas_;
    double spacing_;
    double wavelength_;
};

inline void check_position(const Position& p, const ArrayGeometry& geom) {
    if (!(p.angle > 0.0 && p.angle < kPi)) {
        std::ostringstream os;
        os << "angle " << p.angle << " rad outside (0, pi)";
        throw InvalidArgument(os.str());
    }
    if (!(p.range > geom.half_aperture()) || !std::isfinite(p.range)) {
        std::ostringstream os;
        os << "range " << p.range << " m not outside the aperture (half-aperture "
           << geom.half_aperture() << " m)";
        throw InvalidArgument(os.str());
    }
}

inline Eigen::VectorXd antenna_offsets(const ArrayGeometry& geom) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(geom.size()));
    for (std::size_t m = 0; m < geom.size(); ++m) out[static_cast<Eigen::Index>(m)] = geom.offset(m);
    return out;
}

inline double per_antenna_distance(const Position& p, const ArrayGeometry& geom, std::size_t m) {
    detail::require(m < geom.size(), "per_antenna_distance: antenna index out of range");
    const double x = geom.offset(m) * geom.spacing();
    return std::sqrt(p.range * p.range + x * x - 2.0 * p.range * x * std::cos(p.angle));
}

/// Per-antenna direction cosines of the target motion. `radial` and
/// `transverse` are dv_m/dv_r and dv_m/dv_theta; they depend on position only.
struct ProjectionWeights {
    double radial = 0.0;
    double transverse = 0.0;
};

inline ProjectionWeights projection_weights(const Position& p, const ArrayGeometry& geom, std::size_t m) {
    const double x = geom.offset(m) * geom.spacing();
    const double rm = per_antenna_distance(p, geom, m);
    return {(p.range - x * std::cos(p.angle)) / rm, x * std::sin(p.angle) / rm};
}

struct VelocityProjection {
    double speed = 0.0; ///< v_m, m/s
    ProjectionWeights partials;
};

inline VelocityProjection velocity_projection(const TargetState& s, const ArrayGeometry& geom, std::size_t m) {
    const auto w = projection_weights(s.position, geom, m);
    return {w.radial * s.velocity.radial + w.transverse * s.velocity.transverse, w};
}

/// Vectorized per-antenna geometry for one position: distances and both
/// projection weights. Everything downstream reads from this.
struct ArrayView {
    Eigen::VectorXd distance;
    Eigen::VectorXd radial_weight;
    Eigen::VectorXd transverse_weight;
};

inline ArrayView array_view(const Position& p, const ArrayGeometry& geom) {
    const auto M = static_cast<Eigen::Index>(geom.size());
    ArrayView v{Eigen::VectorXd(M), Eigen::VectorXd(M), Eigen::VectorXd(M)};
    for (Eigen::Index m = 0; m < M; ++m) {
        const auto idx = static_cast<std::size_t>(m);
        v.distance[m] = per_antenna_distance(p, geom, idx);
        const auto w = projection_weights(p, geom, idx);
        v.radial_weight[m] = w.radial;
        v.transverse_weight[m] = w.transverse;
    }
    return v;
}

/// First-order state prediction over `dt` seconds.
inline Position propagate_state(const Position& p, const Velocity& v, double dt, const ArrayGeometry& geom) {
    detail::require(dt > 0.0, "propagate_state: dt must be positive");
    check_position(p, geom);
    const Position next{p.range + v.radial * dt, p.angle + v.transverse * dt / p.range};
    check_position(next, geom);
    return next;
}

/// Cartesian coordinates (x along the array, y broadside).
inline Eigen::Vector2d to_cartesian(const Position& p) {
    return {p.range * std::cos(p.angle), p.range * std::sin(p.angle)};
}

inline Position to_polar(const Eigen::Vector2d& xy) {
    return {xy.norm(), std::atan2(xy.y(), xy.x())};
}

/// Decompose a Cartesian velocity at `p` into radial/transverse components.
inline Velocity polar_velocity(const Position& p, const Eigen::Vector2d& vel) {
    const double c = std::cos(p.angle);
    const double s = std::sin(p.angle);
    return {vel.x() * c + vel.y() * s, -vel.x() * s + vel.y() * c};
}

} // namespace nfvs
