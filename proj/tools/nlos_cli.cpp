// Command-line front end: render single frames, run the sensitivity study,
// run the synthetic tracking experiments, and benchmark the renderer.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "nlos/nlos.hpp"

namespace {

nlos::SceneGeometry load_scene(const std::string& path) {
    return nlos::scene_from_json(nlos::load_json_file(path));
}

nlos::Pose parse_pose_arg(const std::string& text) {
    // Either a path to a pose JSON file or an inline "x,y,z[,rx,ry,rz]" list.
    if (std::filesystem::exists(text)) return nlos::pose_from_json(nlos::load_json_file(text));
    std::vector<double> vals;
    std::string field;
    std::istringstream in(text);
    while (std::getline(in, field, ',')) vals.push_back(std::stod(field));
    if (vals.size() == 3) return nlos::make_translation_pose({vals[0], vals[1], vals[2]});
    if (vals.size() == 6)
        return nlos::make_pose6({vals[0], vals[1], vals[2]}, vals[3], vals[4], vals[5]);
    throw std::invalid_argument("--pose expects a JSON file or 3 or 6 comma-separated numbers");
}

int cmd_render(const std::string& scene_path, const std::string& object_path,
               const std::string& pose_text, const std::string& out_dir, int threads,
               bool preview) {
    const nlos::SceneGeometry scene = load_scene(scene_path);
    const nlos::ObjectModel object = nlos::load_object(object_path);
    const nlos::Pose pose = parse_pose_arg(pose_text);
    const nlos::RenderSettings settings;

    const auto t0 = std::chrono::steady_clock::now();
    const nlos::Image image = nlos::render_image(scene, settings, object, pose, threads);
    const auto t1 = std::chrono::steady_clock::now();
    const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    nlos::save_pfm(image, (dir / "render.pfm").string());
    if (preview) nlos::save_pgm16(image, (dir / "render.pgm").string());

    std::printf("peak intensity: %.12g\n", nlos::peak_abs(image));
    std::printf("render time: %.3f ms (%dx%d pixels, %zu surfels)\n", ms, image.width,
                image.height, object.surfels.size());
    if (nlos::all_zero(image))
        std::fprintf(stderr, "warning: image is identically zero; object faces away or is behind the wall\n");
    return 0;
}

int cmd_diff_study(const std::string& scene_path, const std::string& object_path,
                   const std::string& pose_text, const std::string& out_dir, double dt_m,
                   double dr_deg, int threads) {
    const nlos::SceneGeometry scene = load_scene(scene_path);
    const nlos::ObjectModel object = nlos::load_object(object_path);
    const nlos::Pose pose = parse_pose_arg(pose_text);
    const nlos::DiffStudyDeltas deltas{dt_m, dr_deg};
    const nlos::DiffStudyResult result =
        nlos::run_diff_study(scene, nlos::RenderSettings{}, object, pose, deltas, threads);
    nlos::write_diff_study(out_dir, result);
    for (const nlos::AxisSensitivity& s : result.axes)
        std::printf("%-5s  peak_rel %.6g  rel_residual %.6g  per_unit %.6g  amplification %.6g\n",
                    s.axis.c_str(), s.peak_rel, s.rel_residual, s.per_unit, s.amplification);
    return 0;
}

int cmd_track_synthetic(const std::string& spec_path, int experiment_override,
                        const std::string& out_dir, std::optional<uint64_t> seed,
                        std::optional<int> trials, std::optional<int> threads) {
    nlos::ExperimentSetup setup = nlos::load_experiment_spec(spec_path);
    if (experiment_override > 0) setup.spec.experiment = experiment_override;
    if (seed) setup.spec.seed = *seed;
    if (trials) setup.spec.trials = *trials;
    if (threads) setup.spec.tracker.render_threads = *threads;
    nlos::validate(setup.spec);

    const std::vector<nlos::ExperimentResult> results = nlos::run_experiment(setup);

    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    nlos::write_stats_csv((dir / "stats.csv").string(), setup.spec.experiment, results);
    nlos::write_trials_csv((dir / "trials.csv").string(), setup.spec.experiment, results);
    nlos::write_timing_csv((dir / "timing.csv").string(), results);

    for (const nlos::ExperimentResult& res : results) {
        std::printf("variant %-10s  pooled translation RMS %.6g m  pooled std %.6g cm  (%.2f s)\n",
                    res.variant.c_str(), nlos::pooled_translation_rms_m(res),
                    nlos::pooled_translation_std_cm(res), res.elapsed_seconds);
        int failures = 0;
        for (const nlos::TrialRecord& t : res.trials) failures += t.failed ? 1 : 0;
        if (failures > 0) std::printf("  failed trials: %d\n", failures);
    }
    return 0;
}

int cmd_bench(const std::string& out_dir, int repeats, int threads) {
    const std::vector<nlos::BenchRow> rows = nlos::run_bench(nlos::RenderSettings{}, repeats,
                                                             threads);
    std::filesystem::create_directories(out_dir);
    nlos::write_bench_csv((std::filesystem::path(out_dir) / "bench.csv").string(), rows);
    for (const nlos::BenchRow& r : rows)
        std::printf("%-8s %4dx%-4d %4d surfels  %8.3f ms  ratio %.3f\n", r.ladder.c_str(),
                    r.width, r.height, r.surfels, r.best_ms, r.ratio_vs_prev);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Around-the-corner object tracking toolkit"};
    app.require_subcommand(1);

    std::string scene_path, object_path, spec_path, out_dir = "out", pose_text = "0,0.5,0";
    int threads = 0, experiment = 0, repeats = 3;
    bool preview = false;
    double dt_m = 0.025, dr_deg = 7.5;
    std::optional<uint64_t> seed;
    std::optional<int> trials_override, threads_override;

    CLI::App* render = app.add_subcommand("render", "Render one image of the hidden object");
    render->add_option("--scene", scene_path, "Scene JSON file")->required();
    render->add_option("--object", object_path, "Surfel object file")->required();
    render->add_option("--pose", pose_text, "Pose JSON file or x,y,z[,rx,ry,rz]");
    render->add_option("--out", out_dir, "Output directory");
    render->add_option("--threads", threads, "Render threads (0 = auto)");
    render->add_flag("--preview", preview, "Also write a 16-bit PGM preview");

    CLI::App* diff = app.add_subcommand("diff-study", "Pose-sensitivity difference images");
    diff->add_option("--scene", scene_path, "Scene JSON file")->required();
    diff->add_option("--object", object_path, "Surfel object file")->required();
    diff->add_option("--pose", pose_text, "Base pose (JSON file or inline)");
    diff->add_option("--out", out_dir, "Output directory");
    diff->add_option("--delta-translation", dt_m, "Probe offset per translation axis, m");
    diff->add_option("--delta-rotation", dr_deg, "Probe offset per rotation axis, deg");
    diff->add_option("--threads", threads, "Render threads (0 = auto)");

    CLI::App* track = app.add_subcommand("track-synthetic", "Run a synthetic tracking experiment");
    track->add_option("--spec", spec_path, "Experiment spec JSON file")->required();
    track->add_option("--experiment", experiment, "Override experiment number (1-4)")
        ->check(CLI::Range(1, 4));
    track->add_option("--out", out_dir, "Output directory");
    track->add_option("--seed", seed, "Override master seed");
    track->add_option("--trials", trials_override, "Override trials per pose");
    track->add_option("--threads", threads_override, "Override render threads");

    CLI::App* bench = app.add_subcommand("bench", "Renderer scaling benchmark");
    bench->add_option("--out", out_dir, "Output directory");
    bench->add_option("--repeats", repeats, "Timing repeats per configuration")
        ->check(CLI::PositiveNumber);
    bench->add_option("--threads", threads, "Render threads (0 = auto)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (render->parsed())
            return cmd_render(scene_path, object_path, pose_text, out_dir, threads, preview);
        if (diff->parsed())
            return cmd_diff_study(scene_path, object_path, pose_text, out_dir, dt_m, dr_deg,
                                  threads);
        if (track->parsed())
            return cmd_track_synthetic(spec_path, experiment, out_dir, seed, trials_override,
                                       threads_override);
        if (bench->parsed()) return cmd_bench(out_dir, repeats, threads);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
