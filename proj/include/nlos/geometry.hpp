#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlos/vec3.hpp"

namespace nlos {

// Oriented Lambertian area element, the object's atomic unit.
struct Surfel {
    Vec3 position;       // m
    Vec3 normal;         // unit
    double area = 0.0;   // m^2
};

// Ordered surfel collection; order is part of the value (deterministic sums).
struct ObjectModel {
    std::vector<Surfel> surfels;
    std::string name;
};

inline void validate(const Surfel& s) {
    if (!(s.area > 0.0)) throw std::invalid_argument("surfel area must be > 0");
    if (!is_unit(s.normal)) throw std::invalid_argument("surfel normal must have unit norm");
}

inline void validate(const ObjectModel& o) {
    if (o.surfels.empty()) throw std::invalid_argument("object model must be non-empty");
    for (const auto& s : o.surfels) validate(s);
}

inline Vec3 centroid(const ObjectModel& o) {
    if (o.surfels.empty()) throw std::invalid_argument("centroid of empty object");
    Vec3 c{};
    for (const auto& s : o.surfels) c += s.position;
    return c / static_cast<double>(o.surfels.size());
}

inline double total_area(const ObjectModel& o) {
    double a = 0.0;
    for (const auto& s : o.surfels) a += s.area;
    return a;
}

enum class DofMode { Translation3, Pose6 };

// Row-major 3x3 rotation matrix.
using Mat3 = std::array<std::array<double, 3>, 3>;

inline Vec3 mat_apply(const Mat3& m, const Vec3& v) {
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
}

inline Mat3 transpose(const Mat3& m) {
    return {{{m[0][0], m[1][0], m[2][0]}, {m[0][1], m[1][1], m[2][1]}, {m[0][2], m[1][2], m[2][2]}}};
}

inline constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

// Wraps an angle into (-180, 180].
inline double wrap_angle_deg(double deg) {
    double a = std::fmod(deg, 360.0);
    if (a <= -180.0) a += 360.0;
    if (a > 180.0) a -= 360.0;
    return a;
}

// Extrinsic Euler XYZ: rotate about world X, then Y, then Z. Angles in degrees.
inline Mat3 rotation_from_euler_xyz(double rx_deg, double ry_deg, double rz_deg) {
    const double a = deg_to_rad(rx_deg), b = deg_to_rad(ry_deg), c = deg_to_rad(rz_deg);
    const double ca = std::cos(a), sa = std::sin(a);
    const double cb = std::cos(b), sb = std::sin(b);
    const double cc = std::cos(c), sc = std::sin(c);
    // R = Rz(c) * Ry(b) * Rx(a)
    return {{{cc * cb, cc * sb * sa - sc * ca, cc * sb * ca + sc * sa},
             {sc * cb, sc * sb * sa + cc * ca, sc * sb * ca - cc * sa},
             {-sb, cb * sa, cb * ca}}};
}

// Inverse of rotation_from_euler_xyz; returns degrees in (-180, 180].
// At the gimbal singularity (|ry| = 90 deg) rx is folded into rz.
inline std::array<double, 3> euler_xyz_from_rotation(const Mat3& m) {
    const double sb = -m[2][0];
    double a, b, c;
    if (std::abs(sb) < 1.0 - 1e-12) {
        b = std::asin(sb);
        a = std::atan2(m[2][1], m[2][2]);
        c = std::atan2(m[1][0], m[0][0]);
    } else {
        b = sb > 0.0 ? std::numbers::pi / 2.0 : -std::numbers::pi / 2.0;
        a = 0.0;
        c = std::atan2(-m[0][1], m[1][1]);
    }
    return {wrap_angle_deg(rad_to_deg(a)), wrap_angle_deg(rad_to_deg(b)), wrap_angle_deg(rad_to_deg(c))};
}

// Rigid transform parameter: rotation (Euler XYZ, degrees) about the object
// centroid, then translation. Translation3 mode keeps all angles at zero.
struct Pose {
    Vec3 translation;                          // m
    std::array<double, 3> rotation_deg{0, 0, 0};
    DofMode mode = DofMode::Translation3;
};

inline Pose make_translation_pose(const Vec3& t) { return Pose{t, {0, 0, 0}, DofMode::Translation3}; }

inline Pose make_pose6(const Vec3& t, double rx_deg, double ry_deg, double rz_deg) {
    return Pose{t,
                {wrap_angle_deg(rx_deg), wrap_angle_deg(ry_deg), wrap_angle_deg(rz_deg)},
                DofMode::Pose6};
}

inline void validate(const Pose& p) {
    if (p.mode == DofMode::Translation3) {
        for (double r : p.rotation_deg)
            if (r != 0.0) throw std::invalid_argument("Translation3 pose must have zero rotation");
    }
    for (double r : p.rotation_deg)
        if (!(r > -180.0 - 1e-12 && r <= 180.0 + 1e-12))
            throw std::invalid_argument("Euler angles must lie in (-180, 180]");
}

inline Mat3 rotation_matrix(const Pose& p) {
    return rotation_from_euler_xyz(p.rotation_deg[0], p.rotation_deg[1], p.rotation_deg[2]);
}

inline bool is_identity(const Pose& p) {
    return p.translation == Vec3{} && p.rotation_deg[0] == 0.0 && p.rotation_deg[1] == 0.0 &&
           p.rotation_deg[2] == 0.0;
}

// Rotates every surfel about the object centroid, then translates. Normals
// rotate only; areas and surfel order are preserved.
inline ObjectModel apply_pose(const ObjectModel& object, const Pose& pose) {
    validate(pose);
    if (is_identity(pose)) return object;
    ObjectModel out = object;
    const Vec3 pivot = centroid(object);
    const bool rotate = pose.rotation_deg[0] != 0.0 || pose.rotation_deg[1] != 0.0 ||
                        pose.rotation_deg[2] != 0.0;
    if (rotate) {
        const Mat3 r = rotation_matrix(pose);
        for (auto& s : out.surfels) {
            s.position = mat_apply(r, s.position - pivot) + pivot + pose.translation;
            s.normal = mat_apply(r, s.normal);
        }
    } else {
        for (auto& s : out.surfels) s.position += pose.translation;
    }
    return out;
}

// Negated translation, inverted rotation; round-trips apply_pose.
inline Pose inverse(const Pose& p) {
    const auto angles = euler_xyz_from_rotation(transpose(rotation_matrix(p)));
    Pose inv;
    inv.translation = -p.translation;
    inv.rotation_deg = angles;
    inv.mode = p.mode;
    if (p.mode == DofMode::Translation3) inv.rotation_deg = {0, 0, 0};
    return inv;
}

// Regular nx-by-ny grid of surfels spanning width_m x height_m, centered on
// the origin, all facing `normal`. Total area is width_m*height_m exactly.
inline ObjectModel make_planar_object(double width_m, double height_m, int nx, int ny,
                                      const Vec3& normal) {
    if (!(width_m > 0.0) || !(height_m > 0.0))
        throw std::invalid_argument("planar object extents must be positive");
    if (nx < 1 || ny < 1) throw std::invalid_argument("planar object grid counts must be >= 1");
    const Vec3 n = normalized(normal);
    // Deterministic in-plane basis.
    const Vec3 ref = std::abs(n.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
    const Vec3 u = normalized(cross(ref, n));
    const Vec3 v = cross(n, u);
    const double cell_area = (width_m * height_m) / (static_cast<double>(nx) * ny);
    ObjectModel o;
    o.name = "planar";
    o.surfels.reserve(static_cast<size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const double s = ((i + 0.5) / nx - 0.5) * width_m;
            const double t = ((j + 0.5) / ny - 0.5) * height_m;
            o.surfels.push_back({s * u + t * v, n, cell_area});
        }
    }
    return o;
}

}  // namespace nlos
