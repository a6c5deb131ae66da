#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "pave3d/core/image.hpp"

namespace pave3d::features {

/// Summed-area table with a zero top row and left column, double precision.
/// Entry (i, j) holds the sum of all pixels strictly above and left, so any
/// axis-aligned box sum costs four lookups.
struct IntegralImage {
    int width = 0;   // source image width
    int height = 0;  // source image height
    std::vector<double> sums;  // (width + 1) * (height + 1)

    double entry(int i, int j) const { return sums[size_t(j) * (width + 1) + i]; }

    /// Sum over pixel rows [row, row + rows) and columns [col, col + cols),
    /// clamped to the image like the reference SURF implementations, so
    /// filters straddling the border see truncated boxes instead of UB.
    double box_sum(int row, int col, int rows, int cols) const;
};

/// Detected blob-like feature in scale space.
struct Keypoint {
    double x = 0.0;          // subpixel column
    double y = 0.0;          // subpixel row
    double scale = 0.0;      // 1.2 * filter_size / 9, pixels
    double response = 0.0;   // area-normalized Hessian determinant
    int laplacian_sign = 0;  // sign of Dxx + Dyy (bright vs dark blob)
    double orientation = 0.0;  // radians; 0 in upright mode
};

/// 64-component SURF descriptor (4 x 4 subregions x [sum dx, sum |dx|,
/// sum dy, sum |dy|]), unit Euclidean norm.
struct Descriptor {
    std::array<double, 64> v{};
};

struct Match {
    int query_index = 0;
    int train_index = 0;
    double distance = 0.0;  // Euclidean descriptor distance
    double ratio = 0.0;     // best / second-best distance, in [0, 1]
};

/// Result of describing a keypoint list: keypoints whose sampling window
/// leaves the image are dropped, not described.
struct DescribeResult {
    std::vector<Descriptor> descriptors;
    std::vector<size_t> kept_indices;  // into the input keypoint list
    size_t dropped_count = 0;
};

/// Builds the integral image of the luma plane (0.299 R + 0.587 G + 0.114 B).
IntegralImage integral_image(const core::ColorImage& img);

/// Same, from a prepared grayscale buffer (row-major, length w * h).
IntegralImage integral_from_gray(const std::vector<double>& gray, int w, int h);

/// Fast-Hessian detector. Filter sizes 9, 15, 21, 27 in the base octave,
/// doubling steps per octave; responses normalized by filter area squared;
/// 3 x 3 x 3 non-maximum suppression followed by quadratic subpixel and
/// subscale refinement (candidates with offsets beyond 0.5 are discarded).
/// Result is sorted by descending response (ties by position) for
/// determinism. Requires min(width, height) >= 8 * 2^octaves.
std::vector<Keypoint> detect_surf(const IntegralImage& ii, double hessian_threshold = 600.0,
                                  int octaves = 3);

/// SURF descriptors over a 20-scale square window, 4 x 4 subregions with
/// 5 x 5 Haar samples each, Gaussian-weighted (sigma 3.3 scale), unit
/// normalized. Upright mode (default) keeps orientation 0; otherwise a
/// dominant orientation is estimated from Haar responses within 6 scales
/// (pi/3 sliding window) and the sampling grid is rotated to match.
DescribeResult describe_surf(const IntegralImage& ii, const std::vector<Keypoint>& kps,
                             bool upright = true);

/// Lowe-style ratio-test matching: nearest and second-nearest neighbours by
/// Euclidean distance; a match survives iff best/second < ratio_threshold.
/// A single-element train set matches with ratio 0. Ties break toward the
/// lower train index.
std::vector<Match> match_descriptors(const std::vector<Descriptor>& query,
                                     const std::vector<Descriptor>& train,
                                     double ratio_threshold = 0.7);

}  // namespace pave3d::features
