#pragma once

#include <cmath>

#include "pave3d/core/image.hpp"

namespace pave3d::preprocess {

/// Centered crop fractions. The frame borders of structured-light sensors
/// carry most of the noise, so the pipeline keeps only the central region.
struct RoiSpec {
    double fraction_x = 0.8;
    double fraction_y = 0.8;

    void validate() const {
        if (!(fraction_x > 0.0 && fraction_x <= 1.0) || !(fraction_y > 0.0 && fraction_y <= 1.0))
            throw ValidationError("ROI fractions must lie in (0, 1]");
    }
};

/// Gaussian kernel parameters for depth denoising.
struct SmoothSpec {
    double sigma = 1.5;  // pixels
    int radius = 3;      // kernel half-width, pixels

    void validate() const {
        if (sigma <= 0.0) throw ValidationError("smoothing sigma must be positive");
        if (radius < 1) throw ValidationError("smoothing radius must be >= 1");
        if (radius < int(std::ceil(2.0 * sigma)))
            throw ValidationError("smoothing radius must cover at least 2 sigma");
    }
};

/// Pixel window selected by a centered crop. x0/y0 locate the window in the
/// source frame so downstream mosaic coordinates stay consistent.
struct CropRect {
    int x0 = 0;
    int y0 = 0;
    int width = 0;
    int height = 0;
};

/// Computes the centered window of size (round(w * fx), round(h * fy)).
/// Throws RoiTooSmall when the result would be under 16 x 16 px.
CropRect compute_crop_rect(int width, int height, const RoiSpec& roi);

core::DepthImage crop_roi(const core::DepthImage& img, const RoiSpec& roi);
core::ColorImage crop_roi(const core::ColorImage& img, const RoiSpec& roi);

/// Validity-aware Gaussian denoising: each output pixel is the Gaussian-
/// weighted mean of the *valid* depths under the kernel footprint
/// (normalized convolution), re-quantized to integer millimeters by
/// rounding half away from zero. Pixels with no valid neighbor stay
/// invalid; pixels with any valid neighbor become valid, so the valid set
/// only grows.
core::DepthImage gaussian_smooth_depth(const core::DepthImage& depth, const SmoothSpec& spec);

}  // namespace pave3d::preprocess
