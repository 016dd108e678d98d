#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "nlos/image.hpp"

namespace nlos {

namespace detail {

inline bool host_is_little_endian() {
    const uint16_t probe = 1;
    return *reinterpret_cast<const uint8_t*>(&probe) == 1;
}

inline std::string next_pnm_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            std::string skip;
            std::getline(in, skip);
            continue;
        }
        if (!std::isspace(c)) {
            tok.push_back(static_cast<char>(c));
            while ((c = in.get()) != EOF && !std::isspace(c)) tok.push_back(static_cast<char>(c));
            break;
        }
    }
    if (tok.empty()) throw std::runtime_error("unexpected end of header");
    return tok;
}

}  // namespace detail

// Grayscale PFM, scale -1.0 (little-endian), scanlines bottom-to-top.
// Values pass through float32; one save/load cycle is then bit-stable.
inline void save_pfm(const Image& img, const std::string& path) {
    if (img.width <= 0 || img.height <= 0) throw std::invalid_argument("cannot save empty image");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write PFM file: " + path);
    out << "Pf\n" << img.width << " " << img.height << "\n-1.0\n";
    std::vector<float> row(static_cast<size_t>(img.width));
    for (int v = img.height - 1; v >= 0; --v) {
        for (int u = 0; u < img.width; ++u) row[u] = static_cast<float>(img.at(u, v));
        if (!detail::host_is_little_endian())
            for (auto& f : row) {
                auto* b = reinterpret_cast<uint8_t*>(&f);
                std::swap(b[0], b[3]);
                std::swap(b[1], b[2]);
            }
        out.write(reinterpret_cast<const char*>(row.data()), row.size() * sizeof(float));
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline Image load_pfm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open PFM file: " + path);
    const std::string magic = detail::next_pnm_token(in);
    if (magic != "Pf")
        throw std::runtime_error(path + ": expected grayscale PFM magic 'Pf', got '" + magic + "'");
    const int width = std::stoi(detail::next_pnm_token(in));
    const int height = std::stoi(detail::next_pnm_token(in));
    const double scale = std::stod(detail::next_pnm_token(in));
    if (width <= 0 || height <= 0) throw std::runtime_error(path + ": bad PFM dimensions");
    const bool file_little = scale < 0.0;
    Image img(width, height);
    std::vector<float> row(static_cast<size_t>(width));
    for (int v = height - 1; v >= 0; --v) {
        in.read(reinterpret_cast<char*>(row.data()), row.size() * sizeof(float));
        if (!in) throw std::runtime_error(path + ": truncated PFM payload");
        if (file_little != detail::host_is_little_endian())
            for (auto& f : row) {
                auto* b = reinterpret_cast<uint8_t*>(&f);
                std::swap(b[0], b[3]);
                std::swap(b[1], b[2]);
            }
        for (int u = 0; u < width; ++u) img.at(u, v) = static_cast<double>(row[u]);
    }
    return img;
}

// 16-bit binary PGM for viewing, with the linear scale factor recorded in a
// header comment ("# scale <s>", pixel = round(value * s) clamped to 16 bit).
// Negative values clamp to zero; use PFM for exact data.
inline void save_pgm16(const Image& img, const std::string& path, double scale = 0.0) {
    if (img.width <= 0 || img.height <= 0) throw std::invalid_argument("cannot save empty image");
    if (scale <= 0.0) {
        const double peak = max_value(img);
        scale = peak > 0.0 ? 65535.0 / peak : 1.0;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write PGM file: " + path);
    char header[128];
    std::snprintf(header, sizeof(header), "P5\n# scale %.17g\n%d %d\n65535\n", scale, img.width,
                  img.height);
    out << header;
    std::vector<uint8_t> row(static_cast<size_t>(img.width) * 2);
    for (int v = 0; v < img.height; ++v) {
        for (int u = 0; u < img.width; ++u) {
            const double scaled = std::round(img.at(u, v) * scale);
            const auto q = static_cast<uint16_t>(std::clamp(scaled, 0.0, 65535.0));
            row[2 * u] = static_cast<uint8_t>(q >> 8);  // PGM is big-endian
            row[2 * u + 1] = static_cast<uint8_t>(q & 0xff);
        }
        out.write(reinterpret_cast<const char*>(row.data()), row.size());
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

// Reads a 16-bit PGM written by save_pgm16 and undoes the recorded scale.
inline Image load_pgm16(const std::string& path, double* scale_out = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open PGM file: " + path);
    std::string magic;
    in >> magic;
    if (magic != "P5") throw std::runtime_error(path + ": expected binary PGM magic 'P5'");
    double scale = 1.0;
    // Scan comments for the recorded scale while collecting header fields.
    int fields[3];
    int got = 0;
    while (got < 3) {
        int c = in.get();
        if (c == EOF) throw std::runtime_error(path + ": truncated PGM header");
        if (c == '#') {
            std::string comment;
            std::getline(in, comment);
            std::istringstream cs(comment);
            std::string key;
            double value;
            if (cs >> key >> value && key == "scale") scale = value;
            continue;
        }
        if (std::isspace(c)) continue;
        in.unget();
        if (!(in >> fields[got])) throw std::runtime_error(path + ": bad PGM header field");
        ++got;
    }
    in.get();  // single whitespace after maxval
    const int width = fields[0], height = fields[1], maxval = fields[2];
    if (width <= 0 || height <= 0 || maxval != 65535)
        throw std::runtime_error(path + ": expected 16-bit PGM");
    Image img(width, height);
    std::vector<uint8_t> row(static_cast<size_t>(width) * 2);
    for (int v = 0; v < height; ++v) {
        in.read(reinterpret_cast<char*>(row.data()), row.size());
        if (!in) throw std::runtime_error(path + ": truncated PGM payload");
        for (int u = 0; u < width; ++u) {
            const uint16_t q = static_cast<uint16_t>((row[2 * u] << 8) | row[2 * u + 1]);
            img.at(u, v) = static_cast<double>(q) / scale;
        }
    }
    if (scale_out) *scale_out = scale;
    return img;
}

}  // namespace nlos
