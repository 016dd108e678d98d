#pragma once

// Brute-force transliteration of the three-bounce radiance product, written
// directly from the model definition with its own long-double vector math.
// Deliberately shares no code with the library renderer: every normalized
// clamped dot is spelled out with a sqrt, nothing is hoisted or fused. Used
// as the independent check that the renderer computes the same quantity.

#include <cmath>

namespace transport_reference {

struct V3 {
    long double x, y, z;
};

inline V3 sub(V3 a, V3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline long double dot(V3 a, V3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline long double length(V3 a) { return std::sqrt(dot(a, a)); }

// v "circle" w: cosine between v and w clamped to zero from below.
inline long double clamped(V3 v, V3 w) {
    const long double d = dot(v, w);
    if (d <= 0.0L) return 0.0L;
    return d / (length(v) * length(w));
}

struct Config {
    V3 laser_spot;      // p_S, on the wall
    V3 wall_normal;     // n_S == n_W, unit
    V3 surfel_pos;      // p_i
    V3 surfel_normal;   // n_i, unit
    long double area;   // A_i
    V3 wall_point;      // p_W, observed pixel's wall point
    long double rho0, f_spot, f_surfel, f_wall;
};

inline long double radiance(const Config& c) {
    const V3 to_surfel = sub(c.surfel_pos, c.laser_spot);    // p_i - p_S
    const V3 to_spot = sub(c.laser_spot, c.surfel_pos);      // p_S - p_i
    const V3 to_wall = sub(c.wall_point, c.surfel_pos);      // p_W - p_i
    const V3 to_surfel2 = sub(c.surfel_pos, c.wall_point);   // p_i - p_W

    const long double spot_line = c.rho0 * c.f_spot;
    const long double surfel_line = clamped(c.wall_normal, to_surfel) *
                                    clamped(c.surfel_normal, to_spot) /
                                    dot(to_spot, to_spot) * c.f_surfel * c.area;
    const long double wall_line = clamped(c.surfel_normal, to_wall) *
                                  clamped(c.wall_normal, to_surfel2) /
                                  dot(to_wall, to_wall) * c.f_wall;
    return spot_line * surfel_line * wall_line;
}

}  // namespace transport_reference
