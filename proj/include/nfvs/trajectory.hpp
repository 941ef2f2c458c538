// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "nfvs/error.hpp"

namespace nfvs {

/// Piecewise-linear Cartesian path traversed at constant speed. A single
/// waypoint (or zero speed) is a stationary user.
class Trajectory {
public:
    struct Kinematics {
        Eigen::Vector2d position;
        Eigen::Vector2d velocity;
    };

    Trajectory() : Trajectory(std::vector<Eigen::Vector2d>{Eigen::Vector2d(0.0, 10.0)}, 0.0) {}

    Trajectory(std::vector<Eigen::Vector2d> waypoints, double speed)
        : waypoints_(std::move(waypoints)), speed_(speed) {
        detail::require(!waypoints_.empty(), "Trajectory: need at least one waypoint");
        detail::require(speed_ >= 0.0 && std::isfinite(speed_), "Trajectory: speed must be >= 0");
        starts_.push_back(0.0);
        for (std::size_t i = 1; i < waypoints_.size(); ++i) {
            const double len = (waypoints_[i] - waypoints_[i - 1]).norm();
            detail::require(len > 0.0, "Trajectory: consecutive waypoints must differ");
            starts_.push_back(starts_.back() + (speed_ > 0.0 ? len / speed_ : 0.0));
        }
    }

    static Trajectory stationary(const Eigen::Vector2d& at) { return Trajectory({at}, 0.0); }

    bool is_stationary() const { return waypoints_.size() == 1 || speed_ == 0.0; }

    double duration() const {
        return is_stationary() ? std::numeric_limits<double>::infinity() : starts_.back();
    }

    double speed() const { return speed_; }
    const std::vector<Eigen::Vector2d>& waypoints() const { return waypoints_; }

    /// Number of CPIs of length `dt` that start before the path ends.
    std::size_t cpi_count(double dt) const {
        if (is_stationary()) return std::numeric_limits<std::size_t>::max();
        return static_cast<std::size_t>(std::ceil(duration() / dt - 1e-9));
    }

    /// State at time t. At a corner the outgoing segment applies.
    Kinematics at(double t) const {
        if (is_stationary()) return {waypoints_.front(), Eigen::Vector2d::Zero()};
        constexpr double snap = 1e-9;
        std::size_t seg = 0;
        while (seg + 2 < waypoints_.size() && t >= starts_[seg + 1] - snap) ++seg;
        const Eigen::Vector2d dir = (waypoints_[seg + 1] - waypoints_[seg]).normalized();
        const double local = std::abs(t - starts_[seg]) < snap ? 0.0 : t - starts_[seg];
        return {waypoints_[seg] + dir * speed_ * local, dir * speed_};
    }

private:
    std::vector<Eigen::Vector2d> waypoints_;
    std::vector<double> starts_;
    double speed_;
};

/// Polyline whose heading turns by a fixed amount at every corner. Each
/// segment has the same length, so corners fall on multiples of
/// segment_length / speed.
inline std::vector<Eigen::Vector2d> turning_polyline(const Eigen::Vector2d& start, double heading,
                                                     double turn_per_segment, double segment_length,
                                                     std::size_t segments) {
    detail::require(segment_length > 0.0, "turning_polyline: segment length must be positive");
    detail::require(segments >= 1, "turning_polyline: need at least one segment");
    std::vector<Eigen::Vector2d> pts{start};
    for (std::size_t i = 0; i < segments; ++i) {
        const double h = heading + turn_per_segment * static_cast<double>(i);
        pts.push_back(pts.back() + segment_length * Eigen::Vector2d(std::cos(h), std::sin(h)));
    }
    return pts;
}

} // namespace nfvs
