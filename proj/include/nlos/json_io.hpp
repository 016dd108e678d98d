#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "nlos/geometry.hpp"
#include "nlos/measure.hpp"
#include "nlos/noise.hpp"
#include "nlos/render.hpp"
#include "nlos/scene.hpp"
#include "nlos/track.hpp"

namespace nlos {

using json = nlohmann::json;

inline void to_json(json& j, const Vec3& v) { j = json::array({v.x, v.y, v.z}); }

inline void from_json(const json& j, Vec3& v) {
    if (!j.is_array() || j.size() != 3)
        throw std::invalid_argument("expected a 3-element array for a vector");
    v = Vec3{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

NLOHMANN_JSON_SERIALIZE_ENUM(DofMode, {
                                          {DofMode::Translation3, "translation3"},
                                          {DofMode::Pose6, "pose6"},
                                      })

NLOHMANN_JSON_SERIALIZE_ENUM(BackgroundMode, {
                                                 {BackgroundMode::Calibrated, "calibrated"},
                                                 {BackgroundMode::LinearFit, "linear_fit"},
                                                 {BackgroundMode::None, "none"},
                                             })

// Grid block: {"mode": "orthographic"|"pinhole", "width", "height", ...}.
inline GridSpec grid_spec_from_json(const json& j) {
    GridSpec spec;
    spec.width = j.at("width").get<int>();
    spec.height = j.at("height").get<int>();
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "orthographic") {
        OrthographicRect rect;
        rect.origin = j.at("origin").get<Vec3>();
        rect.u_axis = j.at("u_axis").get<Vec3>();
        rect.v_axis = j.at("v_axis").get<Vec3>();
        const auto& extent = j.at("extent");
        if (!extent.is_array() || extent.size() != 2)
            throw std::invalid_argument("grid extent must be [width_m, height_m]");
        rect.width_m = extent[0].get<double>();
        rect.height_m = extent[1].get<double>();
        spec.mapping = rect;
    } else if (mode == "pinhole") {
        Pinhole ph;
        ph.focal_px = j.at("focal_px").get<double>();
        const auto& center = j.at("center_px");
        if (!center.is_array() || center.size() != 2)
            throw std::invalid_argument("grid center_px must be [cx, cy]");
        ph.cx = center[0].get<double>();
        ph.cy = center[1].get<double>();
        ph.look_at = j.at("look_at").get<Vec3>();
        if (j.contains("up")) ph.up = j.at("up").get<Vec3>();
        spec.mapping = ph;
    } else {
        throw std::invalid_argument("grid mode must be \"orthographic\" or \"pinhole\", got \"" +
                                    mode + "\"");
    }
    return spec;
}

inline json grid_spec_to_json(const GridSpec& spec) {
    json j;
    j["width"] = spec.width;
    j["height"] = spec.height;
    if (const auto* rect = std::get_if<OrthographicRect>(&spec.mapping)) {
        j["mode"] = "orthographic";
        j["origin"] = rect->origin;
        j["u_axis"] = rect->u_axis;
        j["v_axis"] = rect->v_axis;
        j["extent"] = json::array({rect->width_m, rect->height_m});
    } else {
        const auto& ph = std::get<Pinhole>(spec.mapping);
        j["mode"] = "pinhole";
        j["focal_px"] = ph.focal_px;
        j["center_px"] = json::array({ph.cx, ph.cy});
        j["look_at"] = ph.look_at;
        j["up"] = ph.up;
    }
    return j;
}

inline SceneGeometry scene_from_json(const json& j) {
    const auto& wall = j.at("wall");
    const auto& laser = j.at("laser");
    const auto& camera = j.at("camera");
    return SceneGeometry(wall.at("point").get<Vec3>(), wall.at("normal").get<Vec3>(),
                         laser.at("source").get<Vec3>(), laser.at("spot").get<Vec3>(),
                         camera.at("center").get<Vec3>(), grid_spec_from_json(j.at("grid")));
}

inline json scene_to_json(const SceneGeometry& scene) {
    json j;
    j["wall"] = {{"point", scene.wall_point()}, {"normal", scene.wall_normal()}};
    j["laser"] = {{"source", scene.laser_source()}, {"spot", scene.laser_spot()}};
    j["camera"] = {{"center", scene.camera_center()}};
    j["grid"] = grid_spec_to_json(scene.grid().spec);
    return j;
}

inline Pose pose_from_json(const json& j) {
    const Vec3 t = j.at("translation").get<Vec3>();
    const bool has_rotation = j.contains("rotation_deg");
    const DofMode mode = j.value("mode", has_rotation ? DofMode::Pose6 : DofMode::Translation3);
    if (mode == DofMode::Translation3) {
        if (has_rotation) {
            const auto r = j.at("rotation_deg");
            if (r[0].get<double>() != 0.0 || r[1].get<double>() != 0.0 ||
                r[2].get<double>() != 0.0)
                throw std::invalid_argument("translation3 pose cannot carry a rotation");
        }
        return make_translation_pose(t);
    }
    std::array<double, 3> rot{0.0, 0.0, 0.0};
    if (has_rotation) {
        const auto& r = j.at("rotation_deg");
        if (!r.is_array() || r.size() != 3)
            throw std::invalid_argument("rotation_deg must be a 3-element array");
        for (size_t k = 0; k < 3; ++k) rot[k] = r[k].get<double>();
    }
    return make_pose6(t, rot[0], rot[1], rot[2]);
}

inline json pose_to_json(const Pose& pose) {
    json j;
    j["translation"] = pose.translation;
    j["mode"] = pose.mode;
    if (pose.mode == DofMode::Pose6)
        j["rotation_deg"] =
            json::array({pose.rotation_deg[0], pose.rotation_deg[1], pose.rotation_deg[2]});
    return j;
}

inline RenderSettings render_settings_from_json(const json& j) {
    RenderSettings s;
    s.rho0 = j.value("rho0", s.rho0);
    s.f_spot = j.value("f_spot", s.f_spot);
    s.f_surfel = j.value("f_surfel", s.f_surfel);
    s.f_wall = j.value("f_wall", s.f_wall);
    validate(s);
    return s;
}

inline NoiseModel noise_model_from_json(const json& j) {
    NoiseModel m;
    m.photon_scale = j.value("photon_scale", m.photon_scale);
    m.read_sigma = j.value("read_sigma", m.read_sigma);
    m.seed = j.value("seed", m.seed);
    validate(m);
    return m;
}

inline FieldModel field_model_from_json(const json& j) {
    FieldModel f;
    f.c0 = j.value("c0", 0.0);
    f.cu = j.value("cu", 0.0);
    f.cv = j.value("cv", 0.0);
    f.cuu = j.value("cuu", 0.0);
    f.cuv = j.value("cuv", 0.0);
    f.cvv = j.value("cvv", 0.0);
    f.flicker_amplitude = j.value("flicker", 0.0);
    validate(f);
    return f;
}

inline TrackerConfig tracker_config_from_json(const json& j) {
    TrackerConfig c;
    c.dof_mode = j.value("dof_mode", c.dof_mode);
    c.background_mode = j.value("background_mode", c.background_mode);
    c.fd_step_translation = j.value("fd_step_translation", c.fd_step_translation);
    c.fd_step_rotation = j.value("fd_step_rotation", c.fd_step_rotation);
    c.lm_initial_damping = j.value("lm_initial_damping", c.lm_initial_damping);
    c.lm_damping_up = j.value("lm_damping_up", c.lm_damping_up);
    c.lm_damping_down = j.value("lm_damping_down", c.lm_damping_down);
    c.lm_damping_limit = j.value("lm_damping_limit", c.lm_damping_limit);
    c.max_iterations = j.value("max_iterations", c.max_iterations);
    c.cost_tolerance = j.value("cost_tolerance", c.cost_tolerance);
    c.step_tolerance = j.value("step_tolerance", c.step_tolerance);
    c.render_threads = j.value("render_threads", c.render_threads);
    if (j.contains("default_init")) c.default_init = pose_from_json(j.at("default_init"));
    validate(c);
    return c;
}

inline json track_result_to_json(const TrackResult& r) {
    json j;
    j["pose"] = pose_to_json(r.pose);
    j["iterations"] = r.iterations;
    j["final_cost"] = r.final_cost;
    j["final_gamma"] = r.final_gamma;
    j["converged"] = r.converged;
    j["simulations_used"] = r.simulations_used;
    j["accepted_steps"] = r.accepted_steps;
    j["rejected_steps"] = r.rejected_steps;
    return j;
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open file");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

inline void save_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open file for writing");
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace nlos
