// Acceptance runner: one criterion per invocation, one PASS/FAIL line on
// stdout, nonzero exit on failure. Usage: acceptance <criterion 1..11> <repo root>.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nlos/experiment.hpp"
#include "reference/transport_reference.hpp"

using namespace nlos;
namespace fs = std::filesystem;

namespace {

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

int report(int criterion, bool pass, const std::string& detail) {
    std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
    return pass ? 0 : 1;
}

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof buf, format, args);
    va_end(args);
    return buf;
}

SceneGeometry wall_scene(const fs::path& root) {
    return scene_from_json(load_json_file((root / "scenes" / "wall2m_80x64.json").string()));
}

ObjectModel square_object(const fs::path& root) {
    return load_object((root / "data" / "objects" / "square_10cm.surfels").string());
}

ExperimentSetup load_spec(const fs::path& root, const char* name) {
    return load_experiment_spec((root / "specs" / name).string());
}

// Noiseless calibrated measurement of the object at `truth`.
Image noiseless_measurement(const SceneGeometry& scene, const RenderSettings& settings,
                            const ObjectModel& object, const Pose& truth) {
    NoiseModel quiet;
    quiet.photon_scale = 0.0;
    quiet.read_sigma = 0.0;
    const FieldModel ambient, background;
    const FrameSet frames =
        synthesize_frames(scene, settings, object, truth, ambient, background, quiet);
    const Image estimate = estimate_background({synthesize_calibration_pair(
        ambient, background, quiet, scene.width(), scene.height())});
    return compute_measurement(frames, estimate);
}

// Closure at the true pose: zero residual, immediate convergence.
int criterion_1(const fs::path& root) {
    const Timer timer;
    const SceneGeometry scene = wall_scene(root);
    const ObjectModel object = square_object(root);
    const RenderSettings settings;
    const Pose truth = make_translation_pose({0, 0.5, 0});
    const Image m = noiseless_measurement(scene, settings, object, truth);

    TrackerConfig config;
    const PoseObjective obj = make_objective(scene, settings, object, m, config);
    const double at_truth = obj(truth).value;
    const double bound = 1e-12 * norm_sq(m);
    const TrackResult r = levenberg_marquardt(obj, truth, config);
    const double elapsed = timer.seconds();

    const bool pass =
        at_truth <= bound && r.converged && r.iterations <= 2 && elapsed < 1.0;
    return report(1, pass,
                  fmt("closure cost %.3e (bound %.3e), %d iterations (<= 2), "
                      "converged %d, %.2f s (< 1 s)",
                      at_truth, bound, r.iterations, int(r.converged), elapsed));
}

// Noiseless recovery across the pose grid.
int criterion_2(const fs::path& root) {
    const Timer timer;
    const ExperimentSetup setup = load_spec(root, "exp1_noiseless.json");
    const auto results = run_experiment(setup);
    const ExperimentResult& res = results.front();
    const double elapsed = timer.seconds();

    double worst_rms = 0.0;
    double worst_median = 0.0;
    int failures = 0;
    for (const PoseStats& p : res.pose_stats) {
        failures += p.failures;
        for (const AxisStats& a : p.translation) worst_rms = std::max(worst_rms, a.rms);
        worst_median = std::max(worst_median, p.median_iterations);
    }
    const bool pass = res.pose_stats.size() == 9 && failures == 0 && worst_rms <= 1e-3 &&
                      worst_median <= 10.0 && elapsed < 120.0;
    return report(2, pass,
                  fmt("9 poses x 25 trials, worst per-axis RMS %.3e m (<= 1e-3), worst "
                      "median iterations %.1f (<= 10), %d failures, %.1f s (< 120 s)",
                      worst_rms, worst_median, failures, elapsed));
}

// Noise robustness: sub-centimeter translation std per axis.
int criterion_3(const fs::path& root) {
    const Timer timer;
    const ExperimentSetup setup = load_spec(root, "exp1_noisy.json");
    const auto results = run_experiment(setup);
    const ExperimentResult& res = results.front();
    const double elapsed = timer.seconds();

    double worst_std = 0.0;
    int failures = 0;
    for (const PoseStats& p : res.pose_stats) {
        failures += p.failures;
        for (const AxisStats& a : p.translation) worst_std = std::max(worst_std, a.stddev);
    }
    const bool pass = failures == 0 && worst_std < 0.01 && elapsed < 300.0;
    return report(3, pass,
                  fmt("worst per-axis translation std %.4f cm (< 1 cm), %d failures, "
                      "%.1f s (< 300 s)",
                      worst_std * 100.0, failures, elapsed));
}

// Sensitivity magnitudes: ~1% residual per cm or degree, weak Y rotation.
int criterion_4(const fs::path& root) {
    const Timer timer;
    const SceneGeometry scene = wall_scene(root);
    const ObjectModel object = square_object(root);
    const DiffStudyResult study = run_diff_study(scene, RenderSettings{}, object,
                                                 make_translation_pose({0, 0.5, 0}),
                                                 DiffStudyDeltas{});
    const double elapsed = timer.seconds();

    const double target = 0.01;  // 1% per cm or per degree
    bool in_band = true;
    std::ostringstream axes;
    for (int k : {0, 1, 2, 3, 5}) {
        const AxisSensitivity& s = study.axes[size_t(k)];
        in_band = in_band && s.per_unit >= target / 3.0 && s.per_unit <= target * 3.0;
        axes << s.axis << " " << fmt("%.4f%%", s.per_unit * 100.0) << " ";
    }
    const double ry_ratio = study.axes[4].rel_residual / study.axes[3].rel_residual;
    const bool pass = in_band && ry_ratio <= 1e-3 && elapsed < 30.0;
    return report(4, pass,
                  fmt("per-unit sensitivity %s(target 1%% within 3x), ry/rx residual "
                      "ratio %.2e (<= 1e-3), %.1f s (< 30 s)",
                      axes.str().c_str(), ry_ratio, elapsed));
}

// Fourth-power distance falloff in the symmetric configuration.
int criterion_5(const fs::path&) {
    const Timer timer;
    const double d = 0.5;
    ObjectModel probe;
    probe.name = "probe";
    probe.surfels.push_back({Vec3{0, 0, 0}, Vec3{0, -1, 0}, 1e-4});

    bool pass = true;
    std::ostringstream ratios;
    for (const double eps : {0.05, 0.025, 0.01, 0.005}) {
        OrthographicRect rect;
        rect.origin = Vec3{eps - 0.05, 0, -0.05};
        rect.u_axis = Vec3{1, 0, 0};
        rect.v_axis = Vec3{0, 0, 1};
        rect.width_m = 0.1;
        rect.height_m = 0.1;
        GridSpec grid;
        grid.width = 1;
        grid.height = 1;
        grid.mapping = rect;
        const SceneGeometry scene(Vec3{0, 0, 0}, Vec3{0, 1, 0}, Vec3{0.8, 1.2, -0.4},
                                  Vec3{0, 0, 0}, Vec3{0.4, 1.8, 0.2}, grid);
        const Image near = render_image(scene, RenderSettings{}, probe,
                                        make_translation_pose({0, d, 0}));
        const Image far = render_image(scene, RenderSettings{}, probe,
                                       make_translation_pose({0, 2 * d, 0}));
        const double ratio = near.at(0, 0) / far.at(0, 0);
        pass = pass && ratio >= 15.0 && ratio <= 17.0;
        ratios << fmt("%.4f ", ratio);
    }
    const double elapsed = timer.seconds();
    pass = pass && elapsed < 5.0;
    return report(5, pass,
                  fmt("I(d)/I(2d) for shrinking offsets: %s(each in [15, 17]), %.2f s (< 5 s)",
                      ratios.str().c_str(), elapsed));
}

// Transport term matches the brute-force transliteration.
int criterion_6(const fs::path&) {
    const Timer timer;
    std::mt19937_64 rng(987654321);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> height(0.1, 1.5);
    std::uniform_real_distribution<double> area(1e-5, 1e-2);
    std::uniform_real_distribution<double> factor(0.5, 2.0);
    auto random_unit = [&] {
        Vec3 v;
        do {
            v = {unit(rng), unit(rng), unit(rng)};
        } while (norm(v) < 0.1);
        return normalized(v);
    };

    int nonzero = 0;
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const Vec3 n = random_unit();
        const Vec3 p0{unit(rng), unit(rng), unit(rng)};
        const Vec3 t1 = normalized(cross(std::abs(n.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0}, n));
        const Vec3 t2 = cross(n, t1);
        const Vec3 spot = p0 + unit(rng) * t1 + unit(rng) * t2;
        const Vec3 source = p0 + unit(rng) * t1 + unit(rng) * t2 + height(rng) * n;
        const Vec3 camera = p0 + unit(rng) * t1 + unit(rng) * t2 + height(rng) * n;
        const Vec3 wall_pt = p0 + unit(rng) * t1 + unit(rng) * t2;
        const Surfel surfel{p0 + unit(rng) * t1 + unit(rng) * t2 + height(rng) * n, random_unit(),
                            area(rng)};
        RenderSettings settings;
        settings.rho0 = factor(rng);
        settings.f_spot = factor(rng);
        settings.f_surfel = factor(rng);
        settings.f_wall = factor(rng);

        OrthographicRect rect;
        rect.origin = p0;
        rect.u_axis = t1;
        rect.v_axis = t2;
        rect.width_m = 1.0;
        rect.height_m = 1.0;
        GridSpec grid;
        grid.width = 1;
        grid.height = 1;
        grid.mapping = rect;
        const SceneGeometry scene(p0, n, source, spot, camera, grid);
        const double got = surfel_contribution(scene, settings, surfel, wall_pt);

        transport_reference::Config c;
        c.laser_spot = {spot.x, spot.y, spot.z};
        c.wall_normal = {n.x, n.y, n.z};
        c.surfel_pos = {surfel.position.x, surfel.position.y, surfel.position.z};
        c.surfel_normal = {surfel.normal.x, surfel.normal.y, surfel.normal.z};
        c.area = surfel.area;
        c.wall_point = {wall_pt.x, wall_pt.y, wall_pt.z};
        c.rho0 = settings.rho0;
        c.f_spot = settings.f_spot;
        c.f_surfel = settings.f_surfel;
        c.f_wall = settings.f_wall;
        const double expected = static_cast<double>(transport_reference::radiance(c));

        const double scale = std::max({std::abs(got), std::abs(expected), 1e-300});
        worst = std::max(worst, std::abs(got - expected) / scale);
        if (expected != 0.0) ++nonzero;
    }
    const double elapsed = timer.seconds();
    const bool pass = worst <= 1e-12 && nonzero >= 100 && elapsed < 5.0;
    return report(6, pass,
                  fmt("1000 configurations, worst relative deviation %.2e (<= 1e-12), "
                      "%d nonzero, %.2f s (< 5 s)",
                      worst, nonzero, elapsed));
}

// Cost is invariant under simulation scaling, quadratic under measurement scaling.
int criterion_7(const fs::path&) {
    const Timer timer;
    std::mt19937_64 rng(24680);
    std::uniform_real_distribution<double> pixel(0.1, 2.0);
    double worst_invariance = 0.0;
    double worst_quadratic = 0.0;
    for (int k = 0; k < 100; ++k) {
        Image m(16, 12);
        Image s(16, 12);
        for (size_t i = 0; i < m.size(); ++i) {
            m.pixels[i] = pixel(rng);
            s.pixels[i] = pixel(rng);
        }
        const double base = cost(m, s).value;
        for (const double c : {1e-3, 1.0, 1e3}) {
            const double scaled_sim = cost(m, c * s).value;
            worst_invariance =
                std::max(worst_invariance, std::abs(scaled_sim - base) / base);
            const double scaled_meas = cost(c * m, s).value;
            worst_quadratic =
                std::max(worst_quadratic, std::abs(scaled_meas - c * c * base) / (c * c * base));
        }
    }
    const double elapsed = timer.seconds();
    const bool pass = worst_invariance <= 1e-10 && worst_quadratic <= 1e-12;
    return report(7, pass,
                  fmt("100 pairs, c in {1e-3, 1, 1e3}: invariance deviation %.2e (<= 1e-10), "
                      "quadratic deviation %.2e (<= 1e-12), %.2f s",
                      worst_invariance, worst_quadratic, elapsed));
}

// Background handling: None worst, LinearFit competitive with Calibrated.
int criterion_8(const fs::path& root) {
    const Timer timer;
    const ExperimentSetup setup = load_spec(root, "exp4.json");
    const auto results = run_experiment(setup);
    double rms_calibrated = 0.0, rms_none = 0.0, rms_linear = 0.0;
    for (const ExperimentResult& res : results) {
        const double rms = pooled_translation_rms_m(res);
        if (res.mode == BackgroundMode::Calibrated) rms_calibrated = rms;
        if (res.mode == BackgroundMode::None) rms_none = rms;
        if (res.mode == BackgroundMode::LinearFit) rms_linear = rms;
    }

    // The plane-removal primitive itself must be exact on exact planes.
    Image plane(32, 24);
    for (int v = 0; v < plane.height; ++v)
        for (int u = 0; u < plane.width; ++u) plane.at(u, v) = 0.01 * u + 0.02 * v + 3.0;
    const LinearBackground fit_result = fit_linear_background(plane);
    const double fit_error = std::max({std::abs(fit_result.a - 0.01),
                                       std::abs(fit_result.b - 0.02),
                                       std::abs(fit_result.c - 3.0)});
    const double residual = peak_abs(subtract_plane(plane, fit_result));
    const double elapsed = timer.seconds();

    const bool pass = results.size() == 3 && rms_none > rms_linear &&
                      rms_linear <= 2.0 * rms_calibrated && fit_error <= 1e-12 &&
                      residual <= 1e-12;
    return report(8, pass,
                  fmt("pooled RMS m: none %.4f > linear_fit %.4f, linear_fit <= 2x "
                      "calibrated %.4f; plane fit error %.2e, residual %.2e (<= 1e-12); %.1f s",
                      rms_none, rms_linear, rms_calibrated, fit_error, residual, elapsed));
}

// Calibration averaging follows 1/sqrt(n).
int criterion_9(const fs::path&) {
    const Timer timer;
    FieldModel ambient;
    ambient.c0 = 0.05;
    FieldModel background;
    background.c0 = 0.02;
    background.cu = 0.01;
    background.cv = 0.005;
    NoiseModel noise;
    noise.photon_scale = 1e4;
    noise.read_sigma = 1e-4;
    noise.seed = 31337;
    const int width = 80, height = 64, pairs = 300;

    const Image truth = generate_field(background, width, height);
    auto rms_error = [&](const Image& estimate) {
        return std::sqrt(norm_sq(estimate - truth) / double(estimate.size()));
    };

    std::vector<FramePair> calibration;
    for (int k = 0; k < pairs; ++k)
        calibration.push_back(
            synthesize_calibration_pair(ambient, background, noise, width, height, uint64_t(k)));
    const double sigma_1 = rms_error(calibration.front().i10 - calibration.front().i00);
    const double sigma_n = rms_error(estimate_background(calibration));
    const double ratio = sigma_1 / sigma_n / std::sqrt(double(pairs));
    const double elapsed = timer.seconds();

    const bool pass = ratio >= 0.8 && ratio <= 1.2;
    return report(9, pass,
                  fmt("n=300 pairs: single-pair std %.3e, averaged std %.3e, "
                      "ratio/sqrt(n) %.3f (in [0.8, 1.2]), %.1f s",
                      sigma_1, sigma_n, ratio, elapsed));
}

// Render budget and near-linear scaling.
int criterion_10(const fs::path& root) {
    const Timer timer;
    const SceneGeometry scene =
        scene_from_json(load_json_file((root / "scenes" / "wall2m_160x128.json").string()));
    const ObjectModel object = make_planar_object(0.1, 0.1, 25, 20, Vec3{0, -1, 0});
    const Pose pose = make_translation_pose({0, 0.5, 0});
    render_image(scene, RenderSettings{}, object, pose);  // warm-up
    double best_ms = 1e300;
    for (int k = 0; k < 5; ++k) {
        const Timer t;
        render_image(scene, RenderSettings{}, object, pose);
        best_ms = std::min(best_ms, t.seconds() * 1e3);
    }

    const auto rows = run_bench(RenderSettings{}, 5);
    bool ratios_ok = true;
    std::ostringstream ratios;
    for (const BenchRow& r : rows)
        if (r.ratio_vs_prev != 0.0) {
            ratios_ok = ratios_ok && r.ratio_vs_prev >= 1.3 && r.ratio_vs_prev <= 2.7;
            ratios << fmt("%.2f ", r.ratio_vs_prev);
        }
    const double elapsed = timer.seconds();

    const bool pass = best_ms <= 100.0 && ratios_ok;
    return report(10, pass,
                  fmt("160x128 x 500 surfels best of 5: %.1f ms (<= 100 ms); doubling "
                      "ratios %s(each in [1.3, 2.7]); %.1f s",
                      best_ms, ratios.str().c_str(), elapsed));
}

// Rotation estimates scatter more than translation estimates.
int criterion_11(const fs::path& root) {
    const Timer timer;
    const auto rotation_results = run_experiment(load_spec(root, "exp2.json"));
    const auto translation_results = run_experiment(load_spec(root, "exp1_noisy.json"));
    const double rot_deg = pooled_rotation_std_deg(rotation_results.front());
    const double trans_cm = pooled_translation_std_cm(translation_results.front());
    const double elapsed = timer.seconds();

    const bool pass = rot_deg >= trans_cm;
    return report(11, pass,
                  fmt("pooled rotation std %.3f deg >= pooled translation std %.3f cm "
                      "on the shared scene and noise; %.1f s",
                      rot_deg, trans_cm, elapsed));
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 3) {
        std::fprintf(stderr, "usage: acceptance <criterion 1..11> <repo root>\n");
        return 2;
    }
    const int criterion = std::atoi(argv[1]);
    const fs::path root = argv[2];
    try {
        switch (criterion) {
            case 1: return criterion_1(root);
            case 2: return criterion_2(root);
            case 3: return criterion_3(root);
            case 4: return criterion_4(root);
            case 5: return criterion_5(root);
            case 6: return criterion_6(root);
            case 7: return criterion_7(root);
            case 8: return criterion_8(root);
            case 9: return criterion_9(root);
            case 10: return criterion_10(root);
            case 11: return criterion_11(root);
            default:
                std::fprintf(stderr, "usage: acceptance <criterion 1..11> <repo root>\n");
                return 2;
        }
    } catch (const std::exception& e) {
        std::printf("FAIL criterion %d: unhandled error: %s\n", criterion, e.what());
        return 1;
    }
}
