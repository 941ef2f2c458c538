// SPDX-License-Identifier: Apache-2.0
//
// Concentrated maximum-likelihood velocity estimation. With the gain profiled
// out, the likelihood reduces to
//
//     g(v) = |tr(Y X^H)|^2 / ||X||_F^2
//
// where column n of X is u_n (u_n^T s_n) and u_n = a (.) d_n. The position is
// taken as given; only (v_r, v_theta) are searched.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "nfvs/echo.hpp"
#include "nfvs/error.hpp"
#include "nfvs/geometry.hpp"

namespace nfvs {

struct LineSearchOptions {
    double shrink = 0.5;
    double sufficient_increase = 1e-4;
    /// Length (m/s, infinity norm) of the first trial move of the first iteration.
    double initial_step = 1.0;
};

struct CoarseGrid {
    double v_max = 30.0;
    int points = 31;
};

/// How the ascent direction is formed from the gradient.
enum class AscentDirection {
    gradient,     ///< plain steepest ascent
    quasi_newton, ///< BFGS-scaled gradient
};

struct EstimatorOptions {
    int max_iters = 100;
    double grad_tol = 1e-8; ///< relative to the objective value
    double step_tol = 1e-4; ///< m/s
    Velocity init{};
    LineSearchOptions line_search{};
    std::optional<CoarseGrid> coarse_grid{};
    AscentDirection direction = AscentDirection::quasi_newton;

    void validate() const {
        detail::require(max_iters >= 1, "EstimatorOptions: max_iters must be >= 1");
        detail::require(grad_tol > 0.0 && step_tol > 0.0, "EstimatorOptions: tolerances must be positive");
        detail::require(line_search.shrink > 0.0 && line_search.shrink < 1.0,
                        "EstimatorOptions: line-search shrink must be in (0, 1)");
        detail::require(line_search.sufficient_increase > 0.0 && line_search.sufficient_increase < 1.0,
                        "EstimatorOptions: sufficient-increase constant must be in (0, 1)");
        detail::require(line_search.initial_step > 0.0, "EstimatorOptions: initial step must be positive");
        if (coarse_grid) {
            detail::require(coarse_grid->v_max > 0.0, "EstimatorOptions: grid v_max must be positive");
            detail::require(coarse_grid->points >= 2, "EstimatorOptions: grid needs >= 2 points per axis");
        }
    }
};

enum class Termination { gradient_converged, step_converged, max_iters };

inline const char* to_string(Termination t) {
    switch (t) {
    case Termination::gradient_converged: return "gradient-converged";
    case Termination::step_converged: return "step-converged";
    case Termination::max_iters: return "max-iters";
    }
    return "unknown";
}

struct EstimateResult {
    Velocity velocity;
    cdouble beta{0.0, 0.0};
    std::vector<double> objective_trace;
    std::vector<Velocity> iterate_trace;
    int iterations = 0;
    Termination termination = Termination::max_iters;
};

/// Precomputes everything about (Y, S, eta) that does not depend on v.
class LikelihoodModel {
public:
    LikelihoodModel(const EchoFrame& frame, const ArrayGeometry& geom, const Position& position)
        : frame_(frame), wavenumber_(geom.wavenumber()), view_(array_view(position, geom)),
          steering_(steering_vector(position, geom)) {
        const auto M = static_cast<Eigen::Index>(geom.size());
        detail::require(frame.transmit.rows() == M && frame.received.rows() == M,
                        "LikelihoodModel: frame row count != number of antennas");
        detail::require(frame.transmit.cols() == frame.received.cols(), "LikelihoodModel: Y and S differ in width");
        detail::require(frame.symbol_period > 0.0, "LikelihoodModel: symbol period must be positive");
    }

    struct Evaluation {
        double value = 0.0;
        Eigen::Vector2d gradient = Eigen::Vector2d::Zero();
        cdouble correlation{0.0, 0.0}; ///< tr(Y X^H)
        double energy = 0.0;           ///< ||X||_F^2
    };

    /// Objective only (and the pieces of beta-hat).
    Evaluation evaluate(const Velocity& v) const { return run(v, false); }

    /// Objective and analytic gradient.
    Evaluation evaluate_with_gradient(const Velocity& v) const { return run(v, true); }

private:
    Evaluation run(const Velocity& v, bool want_gradient) const {
        const Eigen::MatrixXcd& Y = frame_.received;
        const Eigen::MatrixXcd& S = frame_.transmit;
        const Eigen::Index M = S.rows();
        const Eigen::VectorXd speeds = detail::projected_speeds(view_, v);
        const double a_energy = steering_.squaredNorm(); // ||u_n||^2 for every n

        cdouble t{0.0, 0.0};
        double energy = 0.0;
        // Per-symbol pieces reused by the gradient pass.
        std::vector<cdouble> sigma(static_cast<std::size_t>(S.cols()));
        Eigen::VectorXcd u;
        for (Eigen::Index k = 0; k < S.cols(); ++k) {
            detail::modulated_response(steering_, speeds, wavenumber_, symbol_time(k, frame_.symbol_period), u);
            const cdouble s = (u.transpose() * S.col(k))(0);
            sigma[static_cast<std::size_t>(k)] = s;
            // tr(Y X^H) contribution: sum_m Y_mk conj(u_m s)
            t += std::conj(s) * (u.adjoint() * Y.col(k))(0);
            energy += std::norm(s) * a_energy;
        }
        if (!(energy > 0.0)) throw DegenerateModel("likelihood: ||X||_F = 0 (transmit matrix is zero?)");

        Evaluation out;
        out.correlation = t;
        out.energy = energy;
        out.value = std::norm(t) / energy;
        if (!want_gradient) return out;

        // dg/dv_i = 2 Re tr(G dX/dv_i),  G = (Theta Y^H - Omega X^H) / ||X||^4
        const cdouble theta = t * energy;
        const double omega = std::norm(t);
        const double energy2 = energy * energy;
        cdouble acc_r{0.0, 0.0};
        cdouble acc_t{0.0, 0.0};
        Eigen::VectorXcd du_r(M);
        Eigen::VectorXcd du_t(M);
        for (Eigen::Index k = 0; k < S.cols(); ++k) {
            const double time = symbol_time(k, frame_.symbol_period);
            detail::modulated_response(steering_, speeds, wavenumber_, time, u);
            const cdouble factor{0.0, -wavenumber_ * time};
            du_r = (factor * u.array() * view_.radial_weight.array().cast<cdouble>()).matrix();
            du_t = (factor * u.array() * view_.transverse_weight.array().cast<cdouble>()).matrix();
            const cdouble s = sigma[static_cast<std::size_t>(k)];
            const auto sk = S.col(k);
            // dx_n = du (u^T s) + u (du^T s)
            const Eigen::VectorXcd dx_r = du_r * s + u * (du_r.transpose() * sk)(0);
            const Eigen::VectorXcd dx_t = du_t * s + u * (du_t.transpose() * sk)(0);
            // tr(G dX) over column k: sum_m G_km dX_mk with G = (theta conj(Y) - omega conj(X))^T / E^2
            const Eigen::VectorXcd g_col = theta * Y.col(k).conjugate() - omega * (u * s).conjugate();
            acc_r += (g_col.transpose() * dx_r)(0);
            acc_t += (g_col.transpose() * dx_t)(0);
        }
        out.gradient = {2.0 * acc_r.real() / energy2, 2.0 * acc_t.real() / energy2};
        return out;
    }

    const EchoFrame& frame_;
    double wavenumber_;
    ArrayView view_;
    Eigen::VectorXcd steering_;
};

inline double ml_objective(const EchoFrame& frame, const ArrayGeometry& geom, const Position& p, const Velocity& v) {
    return LikelihoodModel(frame, geom, p).evaluate(v).value;
}

/// beta-hat = tr(Y X^H) / ||X||_F^2
inline cdouble estimate_beta(const EchoFrame& frame, const ArrayGeometry& geom, const Position& p, const Velocity& v) {
    const auto e = LikelihoodModel(frame, geom, p).evaluate(v);
    return e.correlation / e.energy;
}

inline Eigen::Vector2d ml_gradient(const EchoFrame& frame, const ArrayGeometry& geom, const Position& p,
                                   const Velocity& v) {
    return LikelihoodModel(frame, geom, p).evaluate_with_gradient(v).gradient;
}

namespace detail {

inline Velocity as_velocity(const Eigen::Vector2d& x) { return {x[0], x[1]}; }
inline Eigen::Vector2d as_vector(const Velocity& v) { return {v.radial, v.transverse}; }

inline void require_finite(double value, const Eigen::Vector2d& grad, const Velocity& at) {
    if (!std::isfinite(value) || !grad.allFinite()) {
        std::ostringstream os;
        os << "estimate_velocity: non-finite objective/gradient at v = (" << at.radial << ", " << at.transverse << ")";
        throw NumericalFailure(os.str());
    }
}

} // namespace detail

/// Best point of a (points x points) grid over [-v_max, v_max]^2.
inline Velocity grid_search(const LikelihoodModel& model, const CoarseGrid& grid) {
    Velocity best{};
    double best_value = -std::numeric_limits<double>::infinity();
    const double step = 2.0 * grid.v_max / (grid.points - 1);
    for (int i = 0; i < grid.points; ++i) {
        for (int j = 0; j < grid.points; ++j) {
            const Velocity v{-grid.v_max + i * step, -grid.v_max + j * step};
            const double value = model.evaluate(v).value;
            if (value > best_value) {
                best_value = value;
                best = v;
            }
        }
    }
    return best;
}

/// Gradient ascent with backtracking (Armijo) line search.
inline EstimateResult estimate_velocity(const EchoFrame& frame, const ArrayGeometry& geom, const Position& position,
                                        const EstimatorOptions& opts) {
    opts.validate();
    const LikelihoodModel model(frame, geom, position);

    Velocity start = opts.init;
    if (opts.coarse_grid) start = grid_search(model, *opts.coarse_grid);

    EstimateResult result;
    Eigen::Vector2d x = detail::as_vector(start);
    auto eval = model.evaluate_with_gradient(start);
    detail::require_finite(eval.value, eval.gradient, start);
    result.objective_trace.push_back(eval.value);
    result.iterate_trace.push_back(start);

    // Inverse-Hessian estimate of -g for the quasi-Newton direction; unscaled
    // until the first accepted step fixes its units.
    Eigen::Matrix2d inv_h = Eigen::Matrix2d::Identity();
    bool inv_h_scaled = false;
    double alpha = -1.0;
    result.termination = Termination::max_iters;

    for (int it = 0; it < opts.max_iters; ++it) {
        const Eigen::Vector2d grad = eval.gradient;
        if (grad.norm() <= opts.grad_tol * eval.value) {
            result.termination = Termination::gradient_converged;
            break;
        }
        const bool use_qn = opts.direction == AscentDirection::quasi_newton && inv_h_scaled;
        Eigen::Vector2d dir = use_qn ? Eigen::Vector2d(inv_h * grad) : grad;
        double slope = grad.dot(dir);
        if (!(slope > 0.0)) { // curvature model went bad; restart from the gradient
            inv_h_scaled = false;
            inv_h.setIdentity();
            dir = grad;
            slope = grad.squaredNorm();
        }

        if (use_qn && inv_h_scaled) {
            alpha = 1.0;
        } else if (alpha < 0.0 || opts.direction == AscentDirection::quasi_newton) {
            alpha = opts.line_search.initial_step / dir.cwiseAbs().maxCoeff();
        } else {
            alpha *= 2.0;
        }

        LikelihoodModel::Evaluation trial;
        Eigen::Vector2d candidate;
        bool accepted = false;
        while (true) {
            candidate = x + alpha * dir;
            trial = model.evaluate(detail::as_velocity(candidate));
            if (!std::isfinite(trial.value)) {
                throw NumericalFailure("estimate_velocity: non-finite objective during line search");
            }
            if (trial.value >= eval.value + opts.line_search.sufficient_increase * alpha * slope) {
                accepted = true;
                break;
            }
            if ((alpha * dir).cwiseAbs().maxCoeff() < opts.step_tol * 1e-3) break;
            alpha *= opts.line_search.shrink;
        }
        if (!accepted) {
            result.termination = Termination::step_converged;
            break;
        }

        const Eigen::Vector2d step = candidate - x;
        const auto next_velocity = detail::as_velocity(candidate);
        const auto next = model.evaluate_with_gradient(next_velocity);
        detail::require_finite(next.value, next.gradient, next_velocity);

        // BFGS on the negated objective: y = grad_old - grad_new.
        const Eigen::Vector2d y = grad - next.gradient;
        const double sy = step.dot(y);
        if (sy > 0.0 && std::isfinite(sy)) {
            if (!inv_h_scaled) {
                inv_h = Eigen::Matrix2d::Identity() * (sy / y.squaredNorm());
                inv_h_scaled = true;
            }
            const double rho = 1.0 / sy;
            const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
            inv_h = (I - rho * step * y.transpose()) * inv_h * (I - rho * y * step.transpose()) +
                    rho * step * step.transpose();
        }

        x = candidate;
        eval = next;
        ++result.iterations;
        result.objective_trace.push_back(eval.value);
        result.iterate_trace.push_back(next_velocity);

        if (step.cwiseAbs().maxCoeff() < opts.step_tol) {
            result.termination = Termination::step_converged;
            break;
        }
    }

    result.velocity = detail::as_velocity(x);
    result.beta = eval.correlation / eval.energy;
    return result;
}

enum class SliceAxis { radial, transverse };

struct SlicePoint {
    double velocity = 0.0;
    double objective = 0.0;
};

/// g along one velocity axis with the other component held fixed.
inline std::vector<SlicePoint> ml_slice(const EchoFrame& frame, const ArrayGeometry& geom, const Position& p,
                                        SliceAxis axis, double fixed_other, double lo, double hi, int points) {
    detail::require(points >= 2, "ml_slice: need at least 2 points");
    detail::require(hi > lo, "ml_slice: empty range");
    const LikelihoodModel model(frame, geom, p);
    std::vector<SlicePoint> out;
    out.reserve(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        const double v = lo + (hi - lo) * i / (points - 1);
        const Velocity vel = axis == SliceAxis::radial ? Velocity{v, fixed_other} : Velocity{fixed_other, v};
        out.push_back({v, model.evaluate(vel).value});
    }
    return out;
}

} // namespace nfvs
