#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace nlos {

// Row-major grid of real intensities (arbitrary radiometric scale).
// Simulated images are >= 0 element-wise; measured/differenced ones may
// carry negatives from noise.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> pixels;

    Image() = default;
    Image(int w, int h, double fill = 0.0) : width(w), height(h) {
        if (w <= 0 || h <= 0) throw std::invalid_argument("image dimensions must be positive");
        pixels.assign(static_cast<size_t>(w) * h, fill);
    }

    double& at(int u, int v) { return pixels[static_cast<size_t>(v) * width + u]; }
    double at(int u, int v) const { return pixels[static_cast<size_t>(v) * width + u]; }
    size_t size() const { return pixels.size(); }
    bool same_shape(const Image& o) const { return width == o.width && height == o.height; }
};

inline void require_same_shape(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("image dimension mismatch");
}

inline Image operator+(const Image& a, const Image& b) {
    require_same_shape(a, b);
    Image out = a;
    for (size_t i = 0; i < out.size(); ++i) out.pixels[i] += b.pixels[i];
    return out;
}

inline Image operator-(const Image& a, const Image& b) {
    require_same_shape(a, b);
    Image out = a;
    for (size_t i = 0; i < out.size(); ++i) out.pixels[i] -= b.pixels[i];
    return out;
}

inline Image operator*(double s, const Image& a) {
    Image out = a;
    for (auto& p : out.pixels) p *= s;
    return out;
}

inline double dot(const Image& a, const Image& b) {
    require_same_shape(a, b);
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += a.pixels[i] * b.pixels[i];
    return acc;
}

inline double norm_sq(const Image& a) { return dot(a, a); }

inline double peak_abs(const Image& a) {
    double m = 0.0;
    for (double p : a.pixels) m = std::max(m, std::abs(p));
    return m;
}

inline double max_value(const Image& a) {
    double m = -std::numeric_limits<double>::infinity();
    for (double p : a.pixels) m = std::max(m, p);
    return m;
}

inline bool all_zero(const Image& a) {
    return std::all_of(a.pixels.begin(), a.pixels.end(), [](double p) { return p == 0.0; });
}

// Index of the largest pixel value, row-major scan order breaks ties.
inline std::pair<int, int> argmax_pixel(const Image& a) {
    size_t best = 0;
    for (size_t i = 1; i < a.size(); ++i)
        if (a.pixels[i] > a.pixels[best]) best = i;
    return {static_cast<int>(best % a.width), static_cast<int>(best / a.width)};
}

// 2x2 box average; both dimensions must be even.
inline Image downsample2x(const Image& a) {
    if (a.width % 2 != 0 || a.height % 2 != 0)
        throw std::invalid_argument("downsample2x requires even dimensions");
    Image out(a.width / 2, a.height / 2);
    for (int v = 0; v < out.height; ++v)
        for (int u = 0; u < out.width; ++u)
            out.at(u, v) = 0.25 * (a.at(2 * u, 2 * v) + a.at(2 * u + 1, 2 * v) +
                                   a.at(2 * u, 2 * v + 1) + a.at(2 * u + 1, 2 * v + 1));
    return out;
}

}  // namespace nlos
