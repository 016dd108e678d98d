#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "nlos/geometry.hpp"
#include "nlos/image.hpp"
#include "nlos/noise.hpp"
#include "nlos/render.hpp"
#include "nlos/scene.hpp"

namespace nlos {

// Slowly varying illumination field over the sensor, used for the ambient
// term (laser off) and the stray-light background term (laser on, pixel
// contributions excluded). Either a stored image or a polynomial in
// normalized pixel coordinates; negative polynomial values clamp to zero.
struct FieldModel {
    std::optional<Image> stored;
    double c0 = 0.0;
    double cu = 0.0, cv = 0.0;
    double cuu = 0.0, cuv = 0.0, cvv = 0.0;
    // Per-frame multiplicative flicker amplitude: each synthesized frame
    // scales this field by a factor drawn uniformly from [1-a, 1+a].
    double flicker_amplitude = 0.0;

    bool is_zero() const {
        return !stored && c0 == 0.0 && cu == 0.0 && cv == 0.0 && cuu == 0.0 &&
               cuv == 0.0 && cvv == 0.0;
    }
};

inline void validate(const FieldModel& f) {
    if (f.flicker_amplitude < 0.0 || f.flicker_amplitude >= 1.0)
        throw std::invalid_argument("flicker amplitude must lie in [0, 1)");
}

inline Image generate_field(const FieldModel& f, int width, int height) {
    validate(f);
    if (f.stored) {
        if (f.stored->width != width || f.stored->height != height)
            throw std::invalid_argument("stored field dimensions do not match the sensor");
        return *f.stored;
    }
    Image out(width, height);
    const double du = width > 1 ? 1.0 / (width - 1) : 0.0;
    const double dv = height > 1 ? 1.0 / (height - 1) : 0.0;
    for (int v = 0; v < height; ++v) {
        const double vn = v * dv;
        for (int u = 0; u < width; ++u) {
            const double un = u * du;
            const double value = f.c0 + f.cu * un + f.cv * vn + f.cuu * un * un +
                                 f.cuv * un * vn + f.cvv * vn * vn;
            out.at(u, v) = std::max(0.0, value);
        }
    }
    return out;
}

// The four-frame capture: laser off/on crossed with object absent/present.
// i00: laser off, object absent        -> ambient
// i10: laser on,  object absent        -> ambient + background
// i01: laser off, object present       -> ambient
// i11: laser on,  object present       -> ambient + background + object
struct FrameSet {
    Image i00, i10, i01, i11;
};

namespace detail {
// Fixed stream tags so each frame slot draws from its own noise stream.
inline constexpr uint64_t kStream00 = 0;
inline constexpr uint64_t kStream10 = 1;
inline constexpr uint64_t kStream01 = 2;
inline constexpr uint64_t kStream11 = 3;

inline Image flickered(const Image& field, const FieldModel& model, uint64_t seed,
                       uint64_t stream) {
    if (model.flicker_amplitude == 0.0) return field;
    const double a = model.flicker_amplitude;
    return uniform_scalar(seed, stream, 1.0 - a, 1.0 + a) * field;
}
}  // namespace detail

// Synthesizes one four-frame capture around a clean object image. `stream`
// separates captures sharing a noise model (e.g. calibration pairs).
inline FrameSet synthesize_frames(const Image& object_image, const FieldModel& ambient,
                                  const FieldModel& background, const NoiseModel& noise,
                                  uint64_t stream = 0) {
    const int w = object_image.width;
    const int h = object_image.height;
    const Image amb = generate_field(ambient, w, h);
    const Image bg = generate_field(background, w, h);
    const uint64_t capture = mix_seed(noise.seed, mix_seed(0xf0a4f0a4ULL, stream));
    FrameSet frames;
    NoiseModel frame_noise = noise;
    frame_noise.seed = capture;
    frames.i00 = apply_noise(detail::flickered(amb, ambient, capture, detail::kStream00),
                             frame_noise, detail::kStream00);
    frames.i10 = apply_noise(
        detail::flickered(amb, ambient, capture, detail::kStream10) + bg, frame_noise,
        detail::kStream10);
    frames.i01 = apply_noise(detail::flickered(amb, ambient, capture, detail::kStream01),
                             frame_noise, detail::kStream01);
    frames.i11 = apply_noise(
        detail::flickered(amb, ambient, capture, detail::kStream11) + bg + object_image,
        frame_noise, detail::kStream11);
    return frames;
}

// Convenience overload that simulates the clean object term itself. Trial
// loops that reuse one pose should render once and call the image overload.
inline FrameSet synthesize_frames(const SceneGeometry& scene, const RenderSettings& settings,
                                  const ObjectModel& object, const Pose& pose,
                                  const FieldModel& ambient, const FieldModel& background,
                                  const NoiseModel& noise, uint64_t stream = 0,
                                  int threads = 0) {
    return synthesize_frames(render_image(scene, settings, object, pose, threads), ambient,
                             background, noise, stream);
}

// Calibration capture: laser on and laser off with the object absent.
struct FramePair {
    Image i10, i00;
};

// One noisy calibration capture (no object term).
inline FramePair synthesize_calibration_pair(const FieldModel& ambient,
                                             const FieldModel& background,
                                             const NoiseModel& noise, int width, int height,
                                             uint64_t stream = 0) {
    const Image amb = generate_field(ambient, width, height);
    const Image bg = generate_field(background, width, height);
    const uint64_t capture = mix_seed(noise.seed, mix_seed(0xca11b0a7ULL, stream));
    NoiseModel frame_noise = noise;
    frame_noise.seed = capture;
    FramePair pair;
    pair.i00 = apply_noise(detail::flickered(amb, ambient, capture, detail::kStream00),
                           frame_noise, detail::kStream00);
    pair.i10 = apply_noise(
        detail::flickered(amb, ambient, capture, detail::kStream10) + bg, frame_noise,
        detail::kStream10);
    return pair;
}

// Mean of (i10 - i00) over calibration captures; estimates the laser-on
// stray-light background. Averaging n pairs shrinks the noise by 1/sqrt(n).
inline Image estimate_background(const std::vector<FramePair>& calibration) {
    if (calibration.empty())
        throw std::invalid_argument("background estimation requires at least one capture");
    Image sum = calibration.front().i10 - calibration.front().i00;
    for (size_t k = 1; k < calibration.size(); ++k) {
        const Image diff = calibration[k].i10 - calibration[k].i00;
        if (!sum.same_shape(diff))
            throw std::invalid_argument("calibration captures must share dimensions");
        sum = sum + diff;
    }
    return (1.0 / static_cast<double>(calibration.size())) * sum;
}

// Measurement used for tracking: object frame minus ambient frame minus the
// background estimate. With zero noise this equals the clean object image.
inline Image compute_measurement(const FrameSet& frames, const Image& background_estimate) {
    if (!frames.i11.same_shape(frames.i01) || !frames.i11.same_shape(background_estimate))
        throw std::invalid_argument("measurement frames must share dimensions");
    return frames.i11 - frames.i01 - background_estimate;
}

// Plane over raw pixel indices: g(u, v) = a*u + b*v + c.
struct LinearBackground {
    double a = 0.0, b = 0.0, c = 0.0;

    double at(int u, int v) const { return a * u + b * v + c; }
};

// Least-squares plane fit over all pixels. On a full rectangular grid the
// centered design is orthogonal, so the solution is exact componentwise.
inline LinearBackground fit_linear_background(const Image& image) {
    const int w = image.width;
    const int h = image.height;
    if (w < 2 || h < 2)
        throw std::invalid_argument("plane fit needs at least two distinct rows and columns");
    const double mu = 0.5 * (w - 1);
    const double mv = 0.5 * (h - 1);
    double suu = 0.0, svv = 0.0, sru = 0.0, srv = 0.0, sr = 0.0;
    for (int v = 0; v < h; ++v) {
        const double dv = v - mv;
        for (int u = 0; u < w; ++u) {
            const double du = u - mu;
            const double r = image.at(u, v);
            sru += r * du;
            srv += r * dv;
            sr += r;
        }
    }
    for (int u = 0; u < w; ++u) suu += (u - mu) * (u - mu);
    for (int v = 0; v < h; ++v) svv += (v - mv) * (v - mv);
    suu *= h;
    svv *= w;
    LinearBackground plane;
    plane.a = sru / suu;
    plane.b = srv / svv;
    plane.c = sr / (static_cast<double>(w) * h) - plane.a * mu - plane.b * mv;
    return plane;
}

inline Image subtract_plane(const Image& image, const LinearBackground& plane) {
    Image out = image;
    for (int v = 0; v < out.height; ++v)
        for (int u = 0; u < out.width; ++u) out.at(u, v) -= plane.at(u, v);
    return out;
}

// Fit-and-subtract in one step; used by the linear-fit preprocessing mode.
// The result has zero least-squares projection onto the plane basis u, v, 1.
inline Image subtract_linear(const Image& image) {
    return subtract_plane(image, fit_linear_background(image));
}

}  // namespace nlos
