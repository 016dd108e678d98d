#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

#include "nlos/image.hpp"

namespace nlos {

// splitmix64 finalizer; mixes two 64-bit values into a well-distributed seed.
inline uint64_t mix_seed(uint64_t a, uint64_t b) {
    uint64_t x = a + 0x9e3779b97f4a7c15ULL * (b + 0x632be59bd9b4e019ULL);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

// Sensor noise: photon (Poisson) counting noise on the clean signal plus
// signal-independent Gaussian read noise. Counter-based per-pixel seeding
// makes the result independent of evaluation order and thread count.
struct NoiseModel {
    double photon_scale = 1e4;  // electrons per intensity unit; 0 disables
    double read_sigma = 0.0;    // intensity units; 0 disables
    uint64_t seed = 0;
};

inline void validate(const NoiseModel& m) {
    if (m.photon_scale < 0.0 || m.read_sigma < 0.0)
        throw std::invalid_argument("noise parameters must be >= 0");
}

// One noisy realization of a clean frame. `stream` distinguishes frames
// drawn from the same model (sub-seeds derive from seed and stream).
inline Image apply_noise(const Image& clean, const NoiseModel& model, uint64_t stream) {
    validate(model);
    Image out = clean;
    if (model.photon_scale == 0.0 && model.read_sigma == 0.0) return out;
    const uint64_t frame_seed = mix_seed(model.seed, stream);
    for (size_t i = 0; i < out.size(); ++i) {
        std::mt19937_64 rng(mix_seed(frame_seed, i));
        double value = out.pixels[i];
        if (model.photon_scale > 0.0 && value > 0.0) {
            std::poisson_distribution<long long> photon(value * model.photon_scale);
            value = static_cast<double>(photon(rng)) / model.photon_scale;
        }
        if (model.read_sigma > 0.0) {
            std::normal_distribution<double> read(0.0, model.read_sigma);
            value += read(rng);
        }
        out.pixels[i] = value;
    }
    return out;
}

// Uniform draw in [lo, hi] from a dedicated stream; used for per-frame
// scalar effects such as mains flicker.
inline double uniform_scalar(uint64_t seed, uint64_t stream, double lo, double hi) {
    std::mt19937_64 rng(mix_seed(seed, mix_seed(0x5ca1ab1eULL, stream)));
    std::uniform_real_distribution<double> dist(lo, hi);
    return dist(rng);
}

}  // namespace nlos
