#pragma once

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "nlos/geometry.hpp"
#include "nlos/image.hpp"
#include "nlos/scene.hpp"

namespace nlos {

// Constant (Lambertian) reflectance values. rho0 subsumes laser power and
// sensor efficiency; the cost function is invariant to all four, so they
// default to 1.
struct RenderSettings {
    double rho0 = 1.0;
    double f_spot = 1.0;    // laser-spot BRDF value
    double f_surfel = 1.0;  // surfel BRDF value
    double f_wall = 1.0;    // wall BRDF value
};

inline void validate(const RenderSettings& s) {
    if (!(s.rho0 > 0.0 && s.f_spot > 0.0 && s.f_surfel > 0.0 && s.f_wall > 0.0))
        throw std::invalid_argument("render settings must be strictly positive");
}

// Normalized and clamped dot product: cos of the angle if positive, else 0.
inline double clamped_cos(const Vec3& v, const Vec3& w) {
    const double nv = norm_sq(v), nw = norm_sq(w);
    if (nv == 0.0 || nw == 0.0) throw std::domain_error("clamped_cos of zero-length vector");
    const double d = dot(v, w);
    return d > 0.0 ? d / std::sqrt(nv * nw) : 0.0;
}

// Distances closer than this are treated as a geometric singularity.
inline constexpr double kSingularityGuard = 1e-9;
inline constexpr double kSingularityGuardSq = kSingularityGuard * kSingularityGuard;

namespace detail {

// Product of two clamped cosines sharing the separation vector d, divided by
// the squared distance: [a o d][b o -d] / |d|^2 == clamp(a.d) clamp(-b.d) / |d|^4.
// Both normals are unit, so no square roots are needed.
inline double paired_cos_over_dist_sq(const Vec3& from_normal, const Vec3& to_normal,
                                      const Vec3& d, double dist_sq) {
    const double ca = dot(from_normal, d);
    const double cb = -dot(to_normal, d);
    if (!(ca > 0.0) || !(cb > 0.0)) return 0.0;
    return (ca * cb) / (dist_sq * dist_sq);
}

// Pose-independent part of a surfel's contribution: laser-spot line times
// surfel line. Constant across pixels, so the renderer hoists it.
inline double source_factor(const SceneGeometry& scene, const RenderSettings& settings,
                            const Surfel& surfel) {
    const Vec3 d = surfel.position - scene.laser_spot();
    const double dist_sq = norm_sq(d);
    if (dist_sq < kSingularityGuardSq)
        throw std::domain_error("surfel coincides with the laser spot");
    const double spot_line = settings.rho0 * settings.f_spot;
    const double surfel_line =
        paired_cos_over_dist_sq(scene.wall_normal(), surfel.normal, d, dist_sq) *
        settings.f_surfel * surfel.area;
    return spot_line * surfel_line;
}

// Per-pixel part: surfel-to-wall line.
inline double wall_factor(const SceneGeometry& scene, const RenderSettings& settings,
                          const Surfel& surfel, const Vec3& wall_point) {
    const Vec3 d = wall_point - surfel.position;
    const double dist_sq = norm_sq(d);
    if (dist_sq < kSingularityGuardSq)
        throw std::domain_error("surfel coincides with the observed wall point");
    return paired_cos_over_dist_sq(surfel.normal, scene.wall_normal(), d, dist_sq) *
           settings.f_wall;
}

inline unsigned resolve_threads(int threads) {
    if (threads > 0) return static_cast<unsigned>(threads);
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

}  // namespace detail

// Radiance reflected from the laser spot via one surfel to one wall point:
// the product of the laser-spot, surfel and wall reflection lines. Zero
// whenever any clamped cosine is zero.
inline double surfel_contribution(const SceneGeometry& scene, const RenderSettings& settings,
                                  const Surfel& surfel, const Vec3& wall_point) {
    return detail::source_factor(scene, settings, surfel) *
           detail::wall_factor(scene, settings, surfel, wall_point);
}

// Full-frame three-bounce image for a posed object. Each pixel sums the
// surfel contributions in stored order; pixels may be evaluated on several
// threads but the result is bit-identical regardless of thread count.
inline Image render_image(const SceneGeometry& scene, const RenderSettings& settings,
                          const ObjectModel& object, const Pose& pose, int threads = 0) {
    validate(settings);
    if (object.surfels.empty()) throw std::invalid_argument("cannot render an empty object");
    const ObjectModel posed = apply_pose(object, pose);
    const size_t n = posed.surfels.size();

    std::vector<double> source(n);
    for (size_t i = 0; i < n; ++i) {
        try {
            source[i] = detail::source_factor(scene, settings, posed.surfels[i]);
        } catch (const std::domain_error& e) {
            throw std::domain_error("surfel " + std::to_string(i) + ": " + e.what());
        }
    }

    const PixelGrid& grid = scene.grid();
    Image img(grid.width, grid.height);
    const size_t total = img.size();

    auto run_pixel = [&](size_t px) {
        const Vec3& wp = grid.wall_points[px];
        double sum = 0.0;
        size_t i = 0;
        try {
            for (; i < n; ++i)
                sum += source[i] * detail::wall_factor(scene, settings, posed.surfels[i], wp);
        } catch (const std::domain_error& e) {
            throw std::domain_error("pixel (" + std::to_string(px % grid.width) + "," +
                                    std::to_string(px / grid.width) + ") surfel " +
                                    std::to_string(i) + ": " + e.what());
        }
        img.pixels[px] = sum;
    };

    const unsigned n_threads = detail::resolve_threads(threads);
    if (n_threads <= 1 || total < 2) {
        for (size_t px = 0; px < total; ++px) run_pixel(px);
        return img;
    }

    constexpr size_t kChunk = 256;
    std::atomic<size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const size_t begin = next.fetch_add(kChunk);
            if (begin >= total || failed.load(std::memory_order_relaxed)) return;
            const size_t end = std::min(begin + kChunk, total);
            try {
                for (size_t px = begin; px < end; ++px) run_pixel(px);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!failed.exchange(true)) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failed.load()) std::rethrow_exception(error);
    return img;
}

// Signed difference of two renders of the same scene and object.
inline Image render_difference(const SceneGeometry& scene, const RenderSettings& settings,
                               const ObjectModel& object, const Pose& pose_a, const Pose& pose_b,
                               int threads = 0) {
    return render_image(scene, settings, object, pose_a, threads) -
           render_image(scene, settings, object, pose_b, threads);
}

}  // namespace nlos
