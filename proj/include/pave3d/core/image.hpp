#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "pave3d/errors.hpp"

namespace pave3d::core {

/// Row-major 16-bit depth map in millimeters. 0 is the no-return sentinel;
/// values outside the sensor operating range are treated as invalid too.
struct DepthImage {
    static constexpr std::uint16_t kMinValidMm = 200;
    static constexpr std::uint16_t kMaxValidMm = 8000;

    int width = 0;
    int height = 0;
    std::vector<std::uint16_t> pixels;

    DepthImage() = default;
    DepthImage(int w, int h) : width(w), height(h), pixels(size_t(w) * size_t(h), 0) {
        if (w < 0 || h < 0) throw ValidationError("DepthImage: negative dimensions");
    }

    static bool is_valid_depth(std::uint16_t d) {
        return d >= kMinValidMm && d <= kMaxValidMm;
    }

    bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }

    std::uint16_t at(int x, int y) const { return pixels[size_t(y) * width + x]; }
    std::uint16_t& at(int x, int y) { return pixels[size_t(y) * width + x]; }

    bool valid_at(int x, int y) const { return is_valid_depth(at(x, y)); }

    size_t valid_count() const {
        size_t n = 0;
        for (std::uint16_t d : pixels) n += is_valid_depth(d) ? 1 : 0;
        return n;
    }
};

/// Row-major 8-bit RGB image (interleaved triples).
struct ColorImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // 3 * width * height

    ColorImage() = default;
    ColorImage(int w, int h) : width(w), height(h), pixels(size_t(w) * size_t(h) * 3, 0) {
        if (w < 0 || h < 0) throw ValidationError("ColorImage: negative dimensions");
    }

    bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }

    std::array<std::uint8_t, 3> at(int x, int y) const {
        const size_t i = (size_t(y) * width + x) * 3;
        return {pixels[i], pixels[i + 1], pixels[i + 2]};
    }
    void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        const size_t i = (size_t(y) * width + x) * 3;
        pixels[i] = r;
        pixels[i + 1] = g;
        pixels[i + 2] = b;
    }
};

/// One captured color+depth pair. `index` orders frames along the travel
/// direction and must be unique within a dataset.
struct RGBDFrame {
    int index = 0;
    ColorImage color;
    DepthImage depth;
    std::optional<std::int64_t> timestamp_ms;
};

}  // namespace pave3d::core
