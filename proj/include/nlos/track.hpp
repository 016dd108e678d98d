#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include "nlos/geometry.hpp"
#include "nlos/image.hpp"
#include "nlos/measure.hpp"
#include "nlos/render.hpp"
#include "nlos/scene.hpp"

namespace nlos {

// Projection factor: the scalar g minimizing ||a - g*b||^2, i.e.
// dot(a, b) / ||b||^2. A zero b leaves the factor undefined (the simulated
// object contributes nothing to the sensor).
inline double gamma(const Image& a, const Image& b) {
    if (!a.same_shape(b))
        throw std::invalid_argument("projection requires matching image dimensions");
    const double denom = norm_sq(b);
    if (denom == 0.0)
        throw std::domain_error("degenerate simulation: image is identically zero");
    return dot(a, b) / denom;
}

struct CostEvaluation {
    double value = 0.0;   // ||residual||^2
    double gamma = 0.0;   // projection factor applied to the simulation
    Image residual;       // measurement - gamma * simulation
};

// Scale-invariant image distance: the simulation is projected onto the
// measurement before comparison, so only its pattern matters, not its level.
inline CostEvaluation cost(const Image& measurement, const Image& simulation) {
    CostEvaluation eval;
    eval.gamma = nlos::gamma(measurement, simulation);
    eval.residual = measurement - eval.gamma * simulation;
    eval.value = norm_sq(eval.residual);
    return eval;
}

// How the measurement and each simulated probe are normalized before the
// scale-invariant comparison:
//   Calibrated: background removed upstream via calibration frames.
//   LinearFit:  best-fit plane subtracted from both sides at every probe.
//   None:       raw images compared directly.
enum class BackgroundMode { Calibrated, LinearFit, None };

inline std::string to_string(BackgroundMode mode) {
    switch (mode) {
        case BackgroundMode::Calibrated: return "calibrated";
        case BackgroundMode::LinearFit: return "linear_fit";
        case BackgroundMode::None: return "none";
    }
    throw std::invalid_argument("unknown background mode");
}

inline CostEvaluation cost_with_background_mode(const Image& measurement,
                                                const Image& simulation, BackgroundMode mode) {
    if (mode != BackgroundMode::LinearFit) return cost(measurement, simulation);
    return cost(subtract_linear(measurement), subtract_linear(simulation));
}

struct TrackerConfig {
    DofMode dof_mode = DofMode::Translation3;
    BackgroundMode background_mode = BackgroundMode::Calibrated;
    double fd_step_translation = 1e-3;  // meters
    double fd_step_rotation = 0.1;      // degrees
    double lm_initial_damping = 1e-3;
    double lm_damping_up = 10.0;
    double lm_damping_down = 0.1;
    double lm_damping_limit = 1e12;
    int max_iterations = 50;
    double cost_tolerance = 1e-8;  // relative decrease per accepted step
    double step_tolerance = 1e-6;  // parameter-space step norm
    Pose default_init;             // cold-start pose for track_frame
    int render_threads = 0;        // 0 = hardware concurrency
};

inline void validate(const TrackerConfig& c) {
    if (c.fd_step_translation <= 0.0 || c.fd_step_rotation <= 0.0)
        throw std::invalid_argument("finite-difference steps must be positive");
    if (c.lm_initial_damping <= 0.0 || c.lm_damping_limit <= 0.0)
        throw std::invalid_argument("damping parameters must be positive");
    if (c.lm_damping_up <= 1.0 || c.lm_damping_down <= 0.0 || c.lm_damping_down >= 1.0)
        throw std::invalid_argument("damping factors must bracket 1");
    if (c.max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
    if (c.cost_tolerance < 0.0 || c.step_tolerance < 0.0)
        throw std::invalid_argument("tolerances must be >= 0");
}

inline int dof_count(DofMode mode) { return mode == DofMode::Pose6 ? 6 : 3; }

using ParamVector = Eigen::Matrix<double, Eigen::Dynamic, 1>;

inline ParamVector params_from_pose(const Pose& pose, DofMode mode) {
    ParamVector p(dof_count(mode));
    p[0] = pose.translation.x;
    p[1] = pose.translation.y;
    p[2] = pose.translation.z;
    if (mode == DofMode::Pose6)
        for (int k = 0; k < 3; ++k) p[3 + k] = pose.rotation_deg[k];
    return p;
}

inline Pose pose_from_params(const ParamVector& p, DofMode mode) {
    const Vec3 t{p[0], p[1], p[2]};
    if (mode == DofMode::Translation3) return make_translation_pose(t);
    return make_pose6(t, p[3], p[4], p[5]);
}

// Pose -> cost closure. Each call performs exactly one transport simulation.
using PoseObjective = std::function<CostEvaluation(const Pose&)>;

// The closure owns copies of its inputs so it stays valid after the caller's
// arguments go out of scope; the copy is a one-time cost per tracker setup.
inline PoseObjective make_objective(const SceneGeometry& scene, const RenderSettings& settings,
                                    const ObjectModel& object, const Image& measurement,
                                    const TrackerConfig& config) {
    if (measurement.width != scene.grid().width || measurement.height != scene.grid().height)
        throw std::invalid_argument("measurement dimensions do not match the sensor grid");
    return [scene, settings, object, measurement, config](const Pose& pose) {
        const Image simulation = render_image(scene, settings, object, pose, config.render_threads);
        return cost_with_background_mode(measurement, simulation, config.background_mode);
    };
}

// Single-pose evaluation; performs exactly one transport simulation.
inline CostEvaluation objective(const SceneGeometry& scene, const RenderSettings& settings,
                                const ObjectModel& object, const Image& measurement,
                                const TrackerConfig& config, const Pose& pose) {
    return make_objective(scene, settings, object, measurement, config)(pose);
}

struct NumericJacobian {
    Eigen::MatrixXd matrix;  // n_pixels x n_dof, forward differences
    CostEvaluation base;
    int simulations = 0;
};

namespace detail {
inline Eigen::VectorXd flatten(const Image& image) {
    return Eigen::Map<const Eigen::VectorXd>(image.pixels.data(),
                                             static_cast<Eigen::Index>(image.size()));
}
}  // namespace detail

// Forward-difference Jacobian of the residual map p -> m - scale(p) * s(p)
// (the scale is re-optimized at every probe, so its derivative is included).
// Costs dof_count probes, plus one base evaluation unless one is supplied.
inline NumericJacobian numeric_jacobian(const PoseObjective& objective, const Pose& pose,
                                        const TrackerConfig& config,
                                        const CostEvaluation* base = nullptr) {
    validate(config);
    const int n = dof_count(config.dof_mode);
    NumericJacobian result;
    if (base) {
        result.base = *base;
    } else {
        result.base = objective(pose);
        result.simulations += 1;
    }
    const Eigen::VectorXd r0 = detail::flatten(result.base.residual);
    result.matrix.resize(r0.size(), n);
    const ParamVector p0 = params_from_pose(pose, config.dof_mode);
    for (int k = 0; k < n; ++k) {
        const double step = k < 3 ? config.fd_step_translation : config.fd_step_rotation;
        ParamVector p = p0;
        p[k] += step;
        CostEvaluation probe;
        try {
            probe = objective(pose_from_params(p, config.dof_mode));
        } catch (const std::domain_error& e) {
            throw std::domain_error("jacobian probe for parameter " + std::to_string(k) +
                                    " failed: " + e.what());
        }
        result.simulations += 1;
        result.matrix.col(k) = (detail::flatten(probe.residual) - r0) / step;
    }
    return result;
}

struct TrackResult {
    Pose pose;
    int iterations = 0;
    double final_cost = std::numeric_limits<double>::quiet_NaN();
    double final_gamma = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
    int simulations_used = 0;
    int accepted_steps = 0;
    int rejected_steps = 0;
};

// Levenberg-Marquardt on the scale-invariant image cost. The damped normal
// equations (JtJ + lambda diag(JtJ)) d = -Jt r are re-solved with increased
// damping after a rejected step without re-rendering; an accepted candidate
// becomes the next base evaluation.
inline TrackResult levenberg_marquardt(const PoseObjective& objective, const Pose& init,
                                       const TrackerConfig& config) {
    validate(config);
    validate(init);
    if (config.dof_mode == DofMode::Translation3 && init.mode == DofMode::Pose6 &&
        !(init.rotation_deg[0] == 0.0 && init.rotation_deg[1] == 0.0 &&
          init.rotation_deg[2] == 0.0))
        throw std::invalid_argument("rotated init is incompatible with translation-only tracking");

    TrackResult result;
    ParamVector params = params_from_pose(init, config.dof_mode);
    result.pose = pose_from_params(params, config.dof_mode);

    CostEvaluation base = objective(result.pose);
    result.simulations_used += 1;
    if (!std::isfinite(base.value)) return result;
    result.final_cost = base.value;
    result.final_gamma = base.gamma;

    double damping = config.lm_initial_damping;
    const double inf = std::numeric_limits<double>::infinity();

    for (int iter = 1; iter <= config.max_iterations; ++iter) {
        result.iterations = iter;
        NumericJacobian jac = numeric_jacobian(objective, result.pose, config, &base);
        result.simulations_used += jac.simulations;
        const Eigen::MatrixXd jtj = jac.matrix.transpose() * jac.matrix;
        const Eigen::VectorXd jtr =
            jac.matrix.transpose() * detail::flatten(base.residual);
        const Eigen::VectorXd diag = jtj.diagonal();

        bool stepped = false;
        while (!stepped) {
            Eigen::MatrixXd damped = jtj;
            damped.diagonal() += damping * diag;
            const Eigen::VectorXd delta = damped.ldlt().solve(-jtr);

            if (!delta.allFinite()) {
                damping *= config.lm_damping_up;
                if (damping > config.lm_damping_limit) return result;
                continue;
            }
            if (delta.norm() < config.step_tolerance) {
                result.converged = true;
                return result;
            }

            const ParamVector candidate_params = params + delta;
            const Pose candidate_pose = pose_from_params(candidate_params, config.dof_mode);
            double candidate_value = inf;
            CostEvaluation candidate;
            try {
                candidate = objective(candidate_pose);
                candidate_value = candidate.value;
            } catch (const std::domain_error&) {
                // Probe left the visible volume; treat as a failed step.
            }
            result.simulations_used += 1;

            if (std::isfinite(candidate_value) && candidate_value < base.value) {
                const double previous = base.value;
                params = candidate_params;
                result.pose = candidate_pose;
                base = std::move(candidate);
                result.final_cost = base.value;
                result.final_gamma = base.gamma;
                result.accepted_steps += 1;
                damping *= config.lm_damping_down;
                stepped = true;
                if (previous - base.value <= config.cost_tolerance * previous) {
                    result.converged = true;
                    return result;
                }
            } else {
                result.rejected_steps += 1;
                damping *= config.lm_damping_up;
                if (damping > config.lm_damping_limit) return result;
            }
        }
    }
    return result;
}

// One frame of the tracking loop: warm start from the previous estimate when
// available, otherwise fall back to the configured cold-start pose.
inline TrackResult track_frame(const SceneGeometry& scene, const RenderSettings& settings,
                               const ObjectModel& object, const Image& measurement,
                               const TrackerConfig& config,
                               const std::optional<Pose>& warm_start = std::nullopt) {
    const PoseObjective objective = make_objective(scene, settings, object, measurement, config);
    const Pose init = warm_start.value_or(config.default_init);
    return levenberg_marquardt(objective, init, config);
}

}  // namespace nlos
