#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "nlos/vec3.hpp"

namespace nlos {

// Wall-plane rectangle sampled uniformly at pixel centers.
struct OrthographicRect {
    Vec3 origin;     // rectangle corner, on the wall plane
    Vec3 u_axis;     // in-plane unit direction of increasing pixel u
    Vec3 v_axis;     // in-plane unit direction of increasing pixel v
    double width_m = 0.0;
    double height_m = 0.0;
};

// Pinhole intrinsics; each pixel ray is cast from the camera center and
// intersected with the wall plane. look_at/up orient the camera.
struct Pinhole {
    double focal_px = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    Vec3 look_at;
    Vec3 up{0, 0, 1};
};

struct GridSpec {
    int width = 0;
    int height = 0;
    std::variant<OrthographicRect, Pinhole> mapping;
};

// Pixel-to-wall-point table, built once by SceneGeometry. The mapping is
// total: a pinhole ray that misses the wall fails construction.
struct PixelGrid {
    int width = 0;
    int height = 0;
    GridSpec spec;
    std::vector<Vec3> wall_points;  // row-major cache
};

inline Vec3 pixel_to_wall_point(const PixelGrid& grid, int u, int v) {
    if (u < 0 || u >= grid.width || v < 0 || v >= grid.height)
        throw std::invalid_argument("pixel index out of range");
    return grid.wall_points[static_cast<size_t>(v) * grid.width + u];
}

// Fixed known environment: wall plane, laser, camera, and the pixel grid.
class SceneGeometry {
public:
    SceneGeometry(const Vec3& wall_point, const Vec3& wall_normal, const Vec3& laser_source,
                  const Vec3& laser_spot, const Vec3& camera_center, const GridSpec& grid_spec)
        : wall_point_(wall_point),
          wall_normal_(normalized(wall_normal)),
          laser_source_(laser_source),
          laser_spot_(laser_spot),
          camera_center_(camera_center) {
        if (std::abs(dot(laser_spot_ - wall_point_, wall_normal_)) >= 1e-9)
            throw std::invalid_argument("laser spot must lie on the wall plane");
        if (!(dot(camera_center_ - wall_point_, wall_normal_) > 0.0))
            throw std::invalid_argument("camera center must lie strictly on the wall-normal side");
        if (!(dot(laser_source_ - wall_point_, wall_normal_) > 0.0))
            throw std::invalid_argument("laser source must lie strictly on the wall-normal side");
        build_grid(grid_spec);
    }

    const Vec3& wall_point() const { return wall_point_; }
    const Vec3& wall_normal() const { return wall_normal_; }
    const Vec3& laser_source() const { return laser_source_; }
    const Vec3& laser_spot() const { return laser_spot_; }
    const Vec3& camera_center() const { return camera_center_; }
    const PixelGrid& grid() const { return grid_; }
    int width() const { return grid_.width; }
    int height() const { return grid_.height; }

    // Signed distance of a point from the wall plane (positive on the
    // hidden-volume side).
    double wall_distance(const Vec3& p) const { return dot(p - wall_point_, wall_normal_); }

private:
    void build_grid(const GridSpec& spec) {
        if (spec.width <= 0 || spec.height <= 0)
            throw std::invalid_argument("pixel grid dimensions must be positive");
        grid_.width = spec.width;
        grid_.height = spec.height;
        grid_.spec = spec;
        grid_.wall_points.resize(static_cast<size_t>(spec.width) * spec.height);
        if (const auto* rect = std::get_if<OrthographicRect>(&spec.mapping)) {
            build_orthographic(*rect);
        } else {
            build_pinhole(std::get<Pinhole>(spec.mapping));
        }
    }

    void build_orthographic(const OrthographicRect& rect) {
        if (!(rect.width_m > 0.0) || !(rect.height_m > 0.0))
            throw std::invalid_argument("orthographic rectangle extents must be positive");
        const Vec3 u_axis = normalized(rect.u_axis);
        const Vec3 v_axis = normalized(rect.v_axis);
        if (std::abs(dot(u_axis, wall_normal_)) >= 1e-9 || std::abs(dot(v_axis, wall_normal_)) >= 1e-9)
            throw std::invalid_argument("orthographic axes must lie in the wall plane");
        if (std::abs(wall_distance(rect.origin)) >= 1e-9)
            throw std::invalid_argument("orthographic origin must lie on the wall plane");
        for (int v = 0; v < grid_.height; ++v) {
            for (int u = 0; u < grid_.width; ++u) {
                const double su = (u + 0.5) / grid_.width * rect.width_m;
                const double sv = (v + 0.5) / grid_.height * rect.height_m;
                grid_.wall_points[static_cast<size_t>(v) * grid_.width + u] =
                    snap_to_wall(rect.origin + su * u_axis + sv * v_axis);
            }
        }
    }

    void build_pinhole(const Pinhole& ph) {
        if (!(ph.focal_px > 0.0)) throw std::invalid_argument("pinhole focal length must be positive");
        const Vec3 forward = normalized(ph.look_at - camera_center_);
        Vec3 right = cross(forward, ph.up);
        if (norm(right) < 1e-9)
            throw std::invalid_argument("pinhole up vector is parallel to the viewing direction");
        right = normalized(right);
        const Vec3 down = cross(forward, right);
        for (int v = 0; v < grid_.height; ++v) {
            for (int u = 0; u < grid_.width; ++u) {
                const Vec3 dir = ((u + 0.5) - ph.cx) / ph.focal_px * right +
                                 ((v + 0.5) - ph.cy) / ph.focal_px * down + forward;
                const double denom = dot(dir, wall_normal_);
                if (std::abs(denom) < 1e-12)
                    throw std::invalid_argument("pinhole ray parallel to the wall at pixel (" +
                                                std::to_string(u) + "," + std::to_string(v) + ")");
                const double t = dot(wall_point_ - camera_center_, wall_normal_) / denom;
                if (!(t > 0.0))
                    throw std::invalid_argument("pinhole ray misses the wall at pixel (" +
                                                std::to_string(u) + "," + std::to_string(v) + ")");
                grid_.wall_points[static_cast<size_t>(v) * grid_.width + u] =
                    snap_to_wall(camera_center_ + t * dir);
            }
        }
    }

    // Removes residual off-plane drift from the ray intersection arithmetic.
    Vec3 snap_to_wall(const Vec3& p) const { return p - wall_distance(p) * wall_normal_; }

    Vec3 wall_point_;
    Vec3 wall_normal_;
    Vec3 laser_source_;
    Vec3 laser_spot_;
    Vec3 camera_center_;
    PixelGrid grid_;
};

}  // namespace nlos
