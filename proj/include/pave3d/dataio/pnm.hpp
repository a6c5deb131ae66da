#pragma once

#include <filesystem>

#include "pave3d/core/image.hpp"

namespace pave3d::dataio {

// Depth frames travel as binary PGM ("P5", maxval 65535, big-endian 16-bit
// samples, values in mm); color frames as binary PPM ("P6", maxval 255).
// Writers are byte-deterministic.

void write_pgm16(const core::DepthImage& img, const std::filesystem::path& path);
core::DepthImage read_pgm16(const std::filesystem::path& path);

void write_ppm(const core::ColorImage& img, const std::filesystem::path& path);
core::ColorImage read_ppm(const std::filesystem::path& path);

}  // namespace pave3d::dataio
