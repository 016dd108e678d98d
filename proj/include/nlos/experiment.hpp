#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nlos/geometry.hpp"
#include "nlos/image.hpp"
#include "nlos/image_io.hpp"
#include "nlos/json_io.hpp"
#include "nlos/measure.hpp"
#include "nlos/noise.hpp"
#include "nlos/object_io.hpp"
#include "nlos/render.hpp"
#include "nlos/scene.hpp"
#include "nlos/track.hpp"

namespace nlos {

// ---------------------------------------------------------------------------
// Experiment description
// ---------------------------------------------------------------------------

struct ExperimentSpec {
    int experiment = 1;  // 1: translation, 2: rotation, 3: single-surfel, 4: background modes
    std::string name = "experiment";
    RenderSettings render;
    TrackerConfig tracker;
    std::vector<Pose> poses;  // truth schedule
    Vec3 init_center{0, 0, 0};
    double init_cube_m = 0.3;  // random inits drawn uniformly from this cube
    int trials = 100;
    double photon_scale = 1e4;
    double read_sigma_rel = 1e-4;  // read noise as a fraction of the peak clean frame
    FieldModel ambient;
    FieldModel background;
    int calibration_pairs = 300;
    uint64_t seed = 0;
};

inline void validate(const ExperimentSpec& spec) {
    if (spec.experiment < 1 || spec.experiment > 4)
        throw std::invalid_argument("experiment must be 1, 2, 3 or 4");
    if (spec.poses.empty()) throw std::invalid_argument("pose schedule must be non-empty");
    if (spec.trials < 1) throw std::invalid_argument("trials must be >= 1");
    if (spec.calibration_pairs < 1)
        throw std::invalid_argument("calibration_pairs must be >= 1");
    if (spec.photon_scale < 0.0 || spec.read_sigma_rel < 0.0)
        throw std::invalid_argument("noise parameters must be >= 0");
    if (!(spec.init_cube_m >= 0.0))
        throw std::invalid_argument("init cube size must be >= 0");
    if (spec.experiment == 2 && spec.tracker.dof_mode != DofMode::Pose6)
        throw std::invalid_argument("experiment 2 requires pose6 tracking");
    for (const Pose& p : spec.poses) validate(p);
}

// Pose schedule: either an explicit "poses" list or a "pose_grid" block that
// perturbs a base pose along one axis at a time (x/y/z in meters, rx/ry/rz
// in degrees), matching the one-axis-at-a-time experiment protocols.
inline std::vector<Pose> pose_schedule_from_json(const json& j) {
    const bool has_list = j.contains("poses");
    const bool has_grid = j.contains("pose_grid");
    if (has_list == has_grid)
        throw std::invalid_argument("specify exactly one of \"poses\" or \"pose_grid\"");
    std::vector<Pose> poses;
    if (has_list) {
        for (const auto& p : j.at("poses")) poses.push_back(pose_from_json(p));
        return poses;
    }
    const auto& grid = j.at("pose_grid");
    const Pose base = pose_from_json(grid.at("base"));
    if (grid.value("include_base", true)) poses.push_back(base);
    static const char* axes[] = {"x", "y", "z", "rx", "ry", "rz"};
    for (int k = 0; k < 6; ++k) {
        if (!grid.contains(axes[k])) continue;
        for (const auto& off : grid.at(axes[k])) {
            const double d = off.get<double>();
            Pose p = base;
            if (k < 3) {
                (k == 0 ? p.translation.x : k == 1 ? p.translation.y : p.translation.z) += d;
            } else {
                p = make_pose6(base.translation, base.rotation_deg[0] + (k == 3 ? d : 0.0),
                               base.rotation_deg[1] + (k == 4 ? d : 0.0),
                               base.rotation_deg[2] + (k == 5 ? d : 0.0));
            }
            poses.push_back(p);
        }
    }
    if (poses.empty()) throw std::invalid_argument("pose_grid produced no poses");
    return poses;
}

inline ExperimentSpec experiment_spec_from_json(const json& j) {
    ExperimentSpec spec;
    spec.experiment = j.value("experiment", 1);
    spec.name = j.value("name", std::string("experiment"));
    if (j.contains("render")) spec.render = render_settings_from_json(j.at("render"));
    if (j.contains("tracker")) spec.tracker = tracker_config_from_json(j.at("tracker"));
    spec.poses = pose_schedule_from_json(j);
    if (j.contains("init")) {
        const auto& init = j.at("init");
        spec.init_center = init.at("center").get<Vec3>();
        spec.init_cube_m = init.value("cube_m", spec.init_cube_m);
    }
    spec.trials = j.value("trials", spec.trials);
    if (j.contains("noise")) {
        const auto& n = j.at("noise");
        spec.photon_scale = n.value("photon_scale", spec.photon_scale);
        spec.read_sigma_rel = n.value("read_sigma_rel", spec.read_sigma_rel);
    }
    if (j.contains("ambient")) spec.ambient = field_model_from_json(j.at("ambient"));
    if (j.contains("background")) spec.background = field_model_from_json(j.at("background"));
    spec.calibration_pairs = j.value("calibration_pairs", spec.calibration_pairs);
    spec.seed = j.value("seed", spec.seed);
    validate(spec);
    return spec;
}

// Materialized experiment: spec plus the loaded scene and object. The spec
// file references the scene and object by path (or an inline scene block and
// planar-object parameters); relative paths resolve against the spec file.
struct ExperimentSetup {
    ExperimentSpec spec;
    SceneGeometry scene;
    ObjectModel object;
};

inline ObjectModel object_from_spec_json(const json& j, const std::filesystem::path& base_dir) {
    const bool has_file = j.contains("object_file");
    const bool has_planar = j.contains("planar_object");
    if (has_file == has_planar)
        throw std::invalid_argument("specify exactly one of \"object_file\" or \"planar_object\"");
    if (has_file) {
        std::filesystem::path p = j.at("object_file").get<std::string>();
        if (p.is_relative()) p = base_dir / p;
        return load_object(p.string());
    }
    const auto& pl = j.at("planar_object");
    ObjectModel o = make_planar_object(pl.at("width_m").get<double>(),
                                       pl.at("height_m").get<double>(), pl.at("nx").get<int>(),
                                       pl.at("ny").get<int>(), pl.at("normal").get<Vec3>());
    o.name = pl.value("name", std::string("planar"));
    return o;
}

inline SceneGeometry scene_from_spec_json(const json& j, const std::filesystem::path& base_dir) {
    const bool has_inline = j.contains("scene");
    const bool has_file = j.contains("scene_file");
    if (has_inline == has_file)
        throw std::invalid_argument("specify exactly one of \"scene\" or \"scene_file\"");
    if (has_inline) return scene_from_json(j.at("scene"));
    std::filesystem::path p = j.at("scene_file").get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    return scene_from_json(load_json_file(p.string()));
}

inline ExperimentSetup load_experiment_spec(const std::string& path) {
    const json j = load_json_file(path);
    const std::filesystem::path base_dir = std::filesystem::path(path).parent_path();
    try {
        return ExperimentSetup{experiment_spec_from_json(j), scene_from_spec_json(j, base_dir),
                               object_from_spec_json(j, base_dir)};
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Experiment execution
// ---------------------------------------------------------------------------

struct TrialRecord {
    int pose_index = 0;
    int trial = 0;
    Pose truth;
    Pose init;
    TrackResult result;
    bool failed = false;  // trial threw; excluded from statistics
    std::string error;
};

struct AxisStats {
    double mean = 0.0;    // mean recovered coordinate
    double stddev = 0.0;  // sample standard deviation of the recovered coordinate
    double rms = 0.0;     // RMS of (recovered - truth)
};

struct PoseStats {
    int pose_index = 0;
    Pose truth;
    int trials = 0;
    int failures = 0;
    std::array<AxisStats, 3> translation;  // meters
    std::array<AxisStats, 3> rotation;     // degrees; zeros for translation-only runs
    double mean_iterations = 0.0;
    double median_iterations = 0.0;
    double mean_simulations = 0.0;
};

struct ExperimentResult {
    std::string variant;  // background mode label; experiments 1-3 have one variant
    BackgroundMode mode = BackgroundMode::Calibrated;
    std::vector<PoseStats> pose_stats;
    std::vector<TrialRecord> trials;
    double elapsed_seconds = 0.0;  // reported separately; never enters the stats CSV
};

inline Pose random_init_pose(const ExperimentSpec& spec, DofMode mode, uint64_t stream) {
    std::mt19937_64 rng(mix_seed(spec.seed, mix_seed(0x1217a5edULL, stream)));
    std::uniform_real_distribution<double> half(-0.5 * spec.init_cube_m, 0.5 * spec.init_cube_m);
    const double dx = half(rng);
    const double dy = half(rng);
    const double dz = half(rng);
    const Vec3 t = spec.init_center + Vec3{dx, dy, dz};
    return mode == DofMode::Pose6 ? make_pose6(t, 0, 0, 0) : make_translation_pose(t);
}

// Tracking proxy for the unknown-shape experiment: one surfel carrying the
// object's aggregate area and mean facing direction.
inline ObjectModel single_surfel_proxy(const ObjectModel& object) {
    validate(object);
    Vec3 mean{0, 0, 0};
    for (const Surfel& s : object.surfels) mean = mean + s.normal;
    const Vec3 n = norm(mean) > 1e-12 ? normalized(mean) : object.surfels.front().normal;
    ObjectModel proxy;
    proxy.name = object.name + "_proxy";
    proxy.surfels.push_back({Vec3{0, 0, 0}, n, total_area(object)});
    return proxy;
}

namespace detail {

inline double sample_stddev(const std::vector<double>& xs, double mean) {
    if (xs.size() < 2) return 0.0;
    double acc = 0.0;
    for (double x : xs) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / (static_cast<double>(xs.size()) - 1.0));
}

inline double median(std::vector<double> xs) {
    if (xs.empty()) return 0.0;
    std::sort(xs.begin(), xs.end());
    const size_t n = xs.size();
    return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

inline AxisStats axis_stats(const std::vector<double>& recovered, double truth) {
    AxisStats s;
    if (recovered.empty()) return s;
    s.mean = std::accumulate(recovered.begin(), recovered.end(), 0.0) /
             static_cast<double>(recovered.size());
    s.stddev = sample_stddev(recovered, s.mean);
    double acc = 0.0;
    for (double x : recovered) acc += (x - truth) * (x - truth);
    s.rms = std::sqrt(acc / static_cast<double>(recovered.size()));
    return s;
}

// Angle residual on the wrapped circle, so +179 vs -179 counts as 2 degrees.
inline double angle_delta(double recovered_deg, double truth_deg) {
    return wrap_angle_deg(recovered_deg - truth_deg);
}

inline PoseStats aggregate_pose(int pose_index, const Pose& truth,
                                const std::vector<TrialRecord>& trials) {
    PoseStats stats;
    stats.pose_index = pose_index;
    stats.truth = truth;
    std::vector<double> coords[3], angles[3], iters, sims;
    for (const TrialRecord& t : trials) {
        if (t.pose_index != pose_index) continue;
        stats.trials += 1;
        if (t.failed) {
            stats.failures += 1;
            continue;
        }
        coords[0].push_back(t.result.pose.translation.x);
        coords[1].push_back(t.result.pose.translation.y);
        coords[2].push_back(t.result.pose.translation.z);
        for (int k = 0; k < 3; ++k)
            angles[k].push_back(truth.rotation_deg[static_cast<size_t>(k)] +
                                angle_delta(t.result.pose.rotation_deg[static_cast<size_t>(k)],
                                            truth.rotation_deg[static_cast<size_t>(k)]));
        iters.push_back(static_cast<double>(t.result.iterations));
        sims.push_back(static_cast<double>(t.result.simulations_used));
    }
    const double tt[3] = {truth.translation.x, truth.translation.y, truth.translation.z};
    for (int k = 0; k < 3; ++k) {
        stats.translation[static_cast<size_t>(k)] = axis_stats(coords[k], tt[k]);
        stats.rotation[static_cast<size_t>(k)] =
            axis_stats(angles[k], truth.rotation_deg[static_cast<size_t>(k)]);
    }
    if (!iters.empty()) {
        stats.mean_iterations =
            std::accumulate(iters.begin(), iters.end(), 0.0) / static_cast<double>(iters.size());
        stats.median_iterations = median(iters);
        stats.mean_simulations =
            std::accumulate(sims.begin(), sims.end(), 0.0) / static_cast<double>(sims.size());
    }
    return stats;
}

}  // namespace detail

// Runs one background-mode variant over the full pose schedule. Clean object
// renders are supplied per pose so variants share them; noise streams are
// shared across variants too, making the mode comparison paired.
inline ExperimentResult run_experiment_variant(const ExperimentSetup& setup, BackgroundMode mode,
                                               const std::vector<Image>& clean_renders,
                                               double read_sigma) {
    const ExperimentSpec& spec = setup.spec;
    const auto start = std::chrono::steady_clock::now();

    TrackerConfig config = spec.tracker;
    config.background_mode = mode;
    const ObjectModel tracker_object =
        spec.experiment == 3 ? single_surfel_proxy(setup.object) : setup.object;

    const int w = setup.scene.grid().width;
    const int h = setup.scene.grid().height;
    NoiseModel noise{spec.photon_scale, read_sigma, spec.seed};

    Image background_estimate(w, h);  // zeros unless calibrated
    if (mode == BackgroundMode::Calibrated) {
        std::vector<FramePair> pairs;
        pairs.reserve(static_cast<size_t>(spec.calibration_pairs));
        for (int k = 0; k < spec.calibration_pairs; ++k)
            pairs.push_back(synthesize_calibration_pair(spec.ambient, spec.background, noise, w,
                                                        h, static_cast<uint64_t>(k)));
        background_estimate = estimate_background(pairs);
    }

    ExperimentResult result;
    result.variant = to_string(mode);
    result.mode = mode;

    for (size_t pose_index = 0; pose_index < spec.poses.size(); ++pose_index) {
        const Pose& truth = spec.poses[pose_index];
        for (int trial = 0; trial < spec.trials; ++trial) {
            const uint64_t stream =
                static_cast<uint64_t>(pose_index) * static_cast<uint64_t>(spec.trials) +
                static_cast<uint64_t>(trial);
            TrialRecord record;
            record.pose_index = static_cast<int>(pose_index);
            record.trial = trial;
            record.truth = truth;
            record.init = random_init_pose(spec, config.dof_mode, stream);
            try {
                const FrameSet frames = synthesize_frames(clean_renders[pose_index], spec.ambient,
                                                          spec.background, noise, stream);
                const Image measurement = compute_measurement(frames, background_estimate);
                const PoseObjective objective = make_objective(
                    setup.scene, spec.render, tracker_object, measurement, config);
                record.result = levenberg_marquardt(objective, record.init, config);
            } catch (const std::exception& e) {
                record.failed = true;
                record.error = e.what();
            }
            result.trials.push_back(std::move(record));
        }
        result.pose_stats.push_back(
            detail::aggregate_pose(static_cast<int>(pose_index), truth, result.trials));
    }

    result.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

// Experiments 1-3 produce a single variant; experiment 4 compares all three
// background modes on identical noisy frames.
inline std::vector<ExperimentResult> run_experiment(const ExperimentSetup& setup) {
    validate(setup.spec);
    validate(setup.object);
    const ExperimentSpec& spec = setup.spec;

    std::vector<Image> clean_renders;
    clean_renders.reserve(spec.poses.size());
    for (const Pose& pose : spec.poses)
        clean_renders.push_back(render_image(setup.scene, spec.render, setup.object, pose,
                                             spec.tracker.render_threads));

    // Read noise emulates a fixed sensor: its floor is a fraction of the
    // brightest clean frame across the whole schedule.
    const int w = setup.scene.grid().width;
    const int h = setup.scene.grid().height;
    const Image ambient = generate_field(spec.ambient, w, h);
    const Image background = generate_field(spec.background, w, h);
    double peak = 0.0;
    for (const Image& render : clean_renders)
        peak = std::max(peak, max_value(ambient + background + render));
    const double read_sigma = spec.read_sigma_rel * peak;

    std::vector<BackgroundMode> modes;
    if (spec.experiment == 4)
        modes = {BackgroundMode::Calibrated, BackgroundMode::None, BackgroundMode::LinearFit};
    else
        modes = {spec.tracker.background_mode};

    std::vector<ExperimentResult> results;
    results.reserve(modes.size());
    for (BackgroundMode mode : modes)
        results.push_back(run_experiment_variant(setup, mode, clean_renders, read_sigma));
    return results;
}

// Pooled dispersion summaries for cross-experiment comparisons.
inline double pooled_translation_std_cm(const ExperimentResult& result) {
    double acc = 0.0;
    int n = 0;
    for (const PoseStats& p : result.pose_stats)
        for (const AxisStats& a : p.translation) {
            acc += a.stddev * a.stddev;
            n += 1;
        }
    return n == 0 ? 0.0 : std::sqrt(acc / n) * 100.0;
}

inline double pooled_rotation_std_deg(const ExperimentResult& result) {
    double acc = 0.0;
    int n = 0;
    for (const PoseStats& p : result.pose_stats)
        for (const AxisStats& a : p.rotation) {
            acc += a.stddev * a.stddev;
            n += 1;
        }
    return n == 0 ? 0.0 : std::sqrt(acc / n);
}

// RMS translation error pooled over poses and axes, in meters.
inline double pooled_translation_rms_m(const ExperimentResult& result) {
    double acc = 0.0;
    int n = 0;
    for (const PoseStats& p : result.pose_stats)
        for (const AxisStats& a : p.translation) {
            acc += a.rms * a.rms;
            n += 1;
        }
    return n == 0 ? 0.0 : std::sqrt(acc / n);
}

// ---------------------------------------------------------------------------
// CSV output (stable formatting; no timing data in statistics files)
// ---------------------------------------------------------------------------

inline std::string csv_number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

inline std::vector<std::vector<std::string>> parse_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open file");
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ls(line);
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (!line.empty() && line.back() == ',') fields.emplace_back();
        rows.push_back(std::move(fields));
    }
    return rows;
}

inline void write_stats_csv(const std::string& path, int experiment,
                            const std::vector<ExperimentResult>& results) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open file for writing");
    out << "experiment,variant,pose_index,truth_tx,truth_ty,truth_tz,truth_rx,truth_ry,truth_rz,"
           "trials,failures,mean_tx,mean_ty,mean_tz,std_tx,std_ty,std_tz,rms_tx,rms_ty,rms_tz,"
           "mean_rx,mean_ry,mean_rz,std_rx,std_ry,std_rz,rms_rx,rms_ry,rms_rz,"
           "mean_iterations,median_iterations,mean_simulations\n";
    for (const ExperimentResult& res : results) {
        for (const PoseStats& p : res.pose_stats) {
            out << experiment << ',' << res.variant << ',' << p.pose_index << ','
                << csv_number(p.truth.translation.x) << ',' << csv_number(p.truth.translation.y)
                << ',' << csv_number(p.truth.translation.z) << ','
                << csv_number(p.truth.rotation_deg[0]) << ',' << csv_number(p.truth.rotation_deg[1])
                << ',' << csv_number(p.truth.rotation_deg[2]) << ',' << p.trials << ','
                << p.failures;
            out << ',' << csv_number(p.translation[0].mean) << ','
                << csv_number(p.translation[1].mean) << ',' << csv_number(p.translation[2].mean)
                << ',' << csv_number(p.translation[0].stddev) << ','
                << csv_number(p.translation[1].stddev) << ','
                << csv_number(p.translation[2].stddev) << ',' << csv_number(p.translation[0].rms)
                << ',' << csv_number(p.translation[1].rms) << ','
                << csv_number(p.translation[2].rms) << ',' << csv_number(p.rotation[0].mean)
                << ',' << csv_number(p.rotation[1].mean) << ',' << csv_number(p.rotation[2].mean)
                << ',' << csv_number(p.rotation[0].stddev) << ','
                << csv_number(p.rotation[1].stddev) << ',' << csv_number(p.rotation[2].stddev)
                << ',' << csv_number(p.rotation[0].rms) << ',' << csv_number(p.rotation[1].rms)
                << ',' << csv_number(p.rotation[2].rms) << ',' << csv_number(p.mean_iterations)
                << ',' << csv_number(p.median_iterations) << ','
                << csv_number(p.mean_simulations) << '\n';
        }
    }
    if (!out) throw std::runtime_error(path + ": write failed");
}

inline void write_trials_csv(const std::string& path, int experiment,
                             const std::vector<ExperimentResult>& results) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open file for writing");
    out << "experiment,variant,pose_index,trial,init_tx,init_ty,init_tz,"
           "rec_tx,rec_ty,rec_tz,rec_rx,rec_ry,rec_rz,"
           "err_tx,err_ty,err_tz,err_rx,err_ry,err_rz,"
           "iterations,simulations,converged,failed\n";
    for (const ExperimentResult& res : results) {
        for (const TrialRecord& t : res.trials) {
            out << experiment << ',' << res.variant << ',' << t.pose_index << ',' << t.trial << ','
                << csv_number(t.init.translation.x) << ',' << csv_number(t.init.translation.y)
                << ',' << csv_number(t.init.translation.z) << ',';
            if (t.failed) {
                out << "0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,1\n";
                continue;
            }
            const Pose& r = t.result.pose;
            out << csv_number(r.translation.x) << ',' << csv_number(r.translation.y) << ','
                << csv_number(r.translation.z) << ',' << csv_number(r.rotation_deg[0]) << ','
                << csv_number(r.rotation_deg[1]) << ',' << csv_number(r.rotation_deg[2]) << ','
                << csv_number(r.translation.x - t.truth.translation.x) << ','
                << csv_number(r.translation.y - t.truth.translation.y) << ','
                << csv_number(r.translation.z - t.truth.translation.z) << ','
                << csv_number(detail::angle_delta(r.rotation_deg[0], t.truth.rotation_deg[0]))
                << ','
                << csv_number(detail::angle_delta(r.rotation_deg[1], t.truth.rotation_deg[1]))
                << ','
                << csv_number(detail::angle_delta(r.rotation_deg[2], t.truth.rotation_deg[2]))
                << ',' << t.result.iterations << ',' << t.result.simulations_used << ','
                << (t.result.converged ? 1 : 0) << ",0\n";
        }
    }
    if (!out) throw std::runtime_error(path + ": write failed");
}

inline void write_timing_csv(const std::string& path,
                             const std::vector<ExperimentResult>& results) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open file for writing");
    out << "variant,elapsed_seconds,total_trials\n";
    for (const ExperimentResult& res : results)
        out << res.variant << ',' << csv_number(res.elapsed_seconds) << ',' << res.trials.size()
            << '\n';
    if (!out) throw std::runtime_error(path + ": write failed");
}

// ---------------------------------------------------------------------------
// Sensitivity study (difference images around a base pose)
// ---------------------------------------------------------------------------

struct DiffStudyDeltas {
    double translation_m = 0.025;
    double rotation_deg = 7.5;
};

inline void validate(const DiffStudyDeltas& d) {
    if (d.translation_m < 0.0 || d.rotation_deg < 0.0)
        throw std::invalid_argument("study deltas must be >= 0");
}

struct AxisSensitivity {
    std::string axis;       // tx, ty, tz, rx, ry, rz, shape
    double span = 0.0;      // full probe span, cm or degrees (0 for shape)
    double peak_abs = 0.0;  // peak |difference|
    double peak_rel = 0.0;  // peak |difference| / peak reference
    double rel_residual = 0.0;     // scale-normalized residual, the tracker's view
    double per_unit = 0.0;         // rel_residual / span
    double amplification = 0.0;    // peak reference / peak |difference|
};

struct DiffStudyResult {
    Image reference;
    std::vector<Image> differences;      // tx, ty, tz, rx, ry, rz order
    std::vector<AxisSensitivity> axes;   // same order, then the shape entry
    Image shape_difference;              // alternate shape minus reference
};

namespace detail {
inline Pose shifted_pose(const Pose& base, int axis, double delta) {
    if (axis < 3) {
        Pose p = base;
        (axis == 0 ? p.translation.x : axis == 1 ? p.translation.y : p.translation.z) += delta;
        return p;
    }
    return make_pose6(base.translation, base.rotation_deg[0] + (axis == 3 ? delta : 0.0),
                      base.rotation_deg[1] + (axis == 4 ? delta : 0.0),
                      base.rotation_deg[2] + (axis == 5 ? delta : 0.0));
}

// Residual after projecting one image onto the other; zero when they differ
// only by a positive scale. Relative to the first image's norm.
inline double scale_normalized_residual(const Image& a, const Image& b) {
    const double na = std::sqrt(norm_sq(a));
    if (na == 0.0 || norm_sq(b) == 0.0) return 0.0;
    const CostEvaluation eval = cost(a, b);
    return std::sqrt(eval.value) / na;
}
}  // namespace detail

// Central-difference sensitivity probe per pose axis, plus a shape probe
// against an equal-area 2:1 rectangle. Sensitivities are measured on the
// scale-normalized residual (what the cost function sees); raw peak ratios
// and suggested amplification factors are reported alongside.
inline DiffStudyResult run_diff_study(const SceneGeometry& scene, const RenderSettings& settings,
                                      const ObjectModel& object, const Pose& base,
                                      const DiffStudyDeltas& deltas, int threads = 0) {
    validate(deltas);
    DiffStudyResult result;
    result.reference = render_image(scene, settings, object, base, threads);
    const double peak_ref = peak_abs(result.reference);
    if (peak_ref == 0.0)
        throw std::domain_error("reference image is identically zero; object not visible");

    static const char* names[] = {"tx", "ty", "tz", "rx", "ry", "rz"};
    for (int axis = 0; axis < 6; ++axis) {
        const double delta = axis < 3 ? deltas.translation_m : deltas.rotation_deg;
        const Image plus =
            render_image(scene, settings, object, detail::shifted_pose(base, axis, delta), threads);
        const Image minus = render_image(scene, settings, object,
                                         detail::shifted_pose(base, axis, -delta), threads);
        Image diff = plus - minus;
        AxisSensitivity s;
        s.axis = names[axis];
        s.span = axis < 3 ? 2.0 * delta * 100.0 : 2.0 * delta;  // cm or degrees
        s.peak_abs = peak_abs(diff);
        s.peak_rel = s.peak_abs / peak_ref;
        s.rel_residual = detail::scale_normalized_residual(plus, minus);
        s.per_unit = s.span > 0.0 ? s.rel_residual / s.span : 0.0;
        s.amplification = s.peak_abs > 0.0 ? peak_ref / s.peak_abs
                                           : std::numeric_limits<double>::infinity();
        result.differences.push_back(std::move(diff));
        result.axes.push_back(std::move(s));
    }

    // Equal-area rectangle with a 2:1 aspect, same facing direction.
    const double side = std::sqrt(total_area(object));
    ObjectModel rectangle = make_planar_object(side * std::numbers::sqrt2,
                                               side / std::numbers::sqrt2, 14, 7,
                                               object.surfels.front().normal);
    rectangle.name = "rectangle";
    const Image alt = render_image(scene, settings, rectangle, base, threads);
    result.shape_difference = alt - result.reference;
    AxisSensitivity shape;
    shape.axis = "shape";
    shape.peak_abs = peak_abs(result.shape_difference);
    shape.peak_rel = shape.peak_abs / peak_ref;
    shape.rel_residual = detail::scale_normalized_residual(result.reference, alt);
    shape.amplification = shape.peak_abs > 0.0 ? peak_ref / shape.peak_abs
                                               : std::numeric_limits<double>::infinity();
    result.axes.push_back(std::move(shape));
    return result;
}

inline void write_diff_study(const std::string& out_dir, const DiffStudyResult& result) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    save_pfm(result.reference, (dir / "reference.pfm").string());
    static const char* names[] = {"tx", "ty", "tz", "rx", "ry", "rz"};
    for (size_t k = 0; k < result.differences.size(); ++k)
        save_pfm(result.differences[k],
                 (dir / (std::string("diff_") + names[k] + ".pfm")).string());
    save_pfm(result.shape_difference, (dir / "diff_shape.pfm").string());
    std::ofstream out(dir / "study.csv");
    if (!out) throw std::runtime_error(out_dir + ": cannot open study.csv for writing");
    out << "axis,span,peak_abs,peak_rel,rel_residual,per_unit,amplification\n";
    for (const AxisSensitivity& s : result.axes)
        out << s.axis << ',' << csv_number(s.span) << ',' << csv_number(s.peak_abs) << ','
            << csv_number(s.peak_rel) << ',' << csv_number(s.rel_residual) << ','
            << csv_number(s.per_unit) << ',' << csv_number(s.amplification) << '\n';
    if (!out) throw std::runtime_error(out_dir + ": write failed");
}

// ---------------------------------------------------------------------------
// Render benchmark (pixel and surfel scaling ladders)
// ---------------------------------------------------------------------------

struct BenchRow {
    std::string ladder;  // "pixels" or "surfels" (plus a smoke row)
    int width = 0;
    int height = 0;
    int surfels = 0;
    double best_ms = 0.0;
    double ratio_vs_prev = 0.0;  // 0 for the first row of a ladder
};

namespace detail {
inline SceneGeometry bench_scene(int width, int height) {
    GridSpec grid;
    grid.width = width;
    grid.height = height;
    grid.mapping = OrthographicRect{Vec3{-1, 0, -1}, Vec3{1, 0, 0}, Vec3{0, 0, 1}, 2.0, 2.0};
    return SceneGeometry(Vec3{0, 0, 0}, Vec3{0, 1, 0}, Vec3{0.8, 1.2, -0.4}, Vec3{0, 0, 0},
                         Vec3{0.4, 1.8, 0.2}, grid);
}

inline double best_render_ms(const SceneGeometry& scene, const RenderSettings& settings,
                             const ObjectModel& object, const Pose& pose, int repeats,
                             int threads) {
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        const Image img = render_image(scene, settings, object, pose, threads);
        const auto t1 = std::chrono::steady_clock::now();
        if (img.size() == 0) throw std::logic_error("empty benchmark render");
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}
}  // namespace detail

inline std::vector<BenchRow> run_bench(const RenderSettings& settings, int repeats = 3,
                                       int threads = 0) {
    if (repeats < 1) throw std::invalid_argument("bench repeats must be >= 1");
    const Pose pose = make_translation_pose({0, 0.5, 0});
    std::vector<BenchRow> rows;

    struct Config {
        const char* ladder;
        int width, height, nx, ny;
    };
    // 2x pixel steps at fixed 500 surfels, then 2x surfel steps at fixed grid.
    const Config configs[] = {
        {"pixels", 80, 64, 25, 20},  {"pixels", 160, 64, 25, 20},  {"pixels", 160, 128, 25, 20},
        {"surfels", 160, 128, 25, 5}, {"surfels", 160, 128, 25, 10}, {"surfels", 160, 128, 25, 20},
    };
    // Untimed warm-up so frequency scaling settles before the first timed row.
    {
        const SceneGeometry scene = detail::bench_scene(160, 128);
        const ObjectModel object = make_planar_object(0.1, 0.1, 25, 20, Vec3{0, -1, 0});
        render_image(scene, settings, object, pose, threads);
    }

    std::string prev_ladder;
    double prev_ms = 0.0;
    for (const Config& c : configs) {
        const SceneGeometry scene = detail::bench_scene(c.width, c.height);
        const ObjectModel object = make_planar_object(0.1, 0.1, c.nx, c.ny, Vec3{0, -1, 0});
        BenchRow row;
        row.ladder = c.ladder;
        row.width = c.width;
        row.height = c.height;
        row.surfels = c.nx * c.ny;
        row.best_ms = detail::best_render_ms(scene, settings, object, pose, repeats, threads);
        row.ratio_vs_prev = (row.ladder == prev_ladder && prev_ms > 0.0)
                                ? row.best_ms / prev_ms
                                : 0.0;
        prev_ladder = row.ladder;
        prev_ms = row.best_ms;
        rows.push_back(std::move(row));
    }

    // Smoke row: minimal scene completes and times cleanly.
    {
        const SceneGeometry scene = detail::bench_scene(1, 1);
        const ObjectModel object = make_planar_object(0.1, 0.1, 1, 1, Vec3{0, -1, 0});
        BenchRow row;
        row.ladder = "smoke";
        row.width = 1;
        row.height = 1;
        row.surfels = 1;
        row.best_ms = detail::best_render_ms(scene, settings, object, pose, repeats, threads);
        rows.push_back(std::move(row));
    }
    return rows;
}

inline void write_bench_csv(const std::string& path, const std::vector<BenchRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open file for writing");
    out << "ladder,width,height,surfels,best_ms,ratio_vs_prev\n";
    for (const BenchRow& r : rows)
        out << r.ladder << ',' << r.width << ',' << r.height << ',' << r.surfels << ','
            << csv_number(r.best_ms) << ',' << csv_number(r.ratio_vs_prev) << '\n';
    if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace nlos
