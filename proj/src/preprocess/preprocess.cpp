#include "pave3d/preprocess/preprocess.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace pave3d::preprocess {

CropRect compute_crop_rect(int width, int height, const RoiSpec& roi) {
    roi.validate();
    CropRect rect;
    rect.width = int(std::llround(width * roi.fraction_x));
    rect.height = int(std::llround(height * roi.fraction_y));
    if (rect.width < 16 || rect.height < 16)
        throw RoiTooSmall("ROI of " + std::to_string(rect.width) + "x" +
                          std::to_string(rect.height) + " is under the 16x16 minimum");
    rect.x0 = (width - rect.width) / 2;
    rect.y0 = (height - rect.height) / 2;
    return rect;
}

core::DepthImage crop_roi(const core::DepthImage& img, const RoiSpec& roi) {
    const CropRect r = compute_crop_rect(img.width, img.height, roi);
    core::DepthImage out(r.width, r.height);
    for (int y = 0; y < r.height; ++y)
        for (int x = 0; x < r.width; ++x) out.at(x, y) = img.at(r.x0 + x, r.y0 + y);
    return out;
}

core::ColorImage crop_roi(const core::ColorImage& img, const RoiSpec& roi) {
    const CropRect r = compute_crop_rect(img.width, img.height, roi);
    core::ColorImage out(r.width, r.height);
    for (int y = 0; y < r.height; ++y)
        for (int x = 0; x < r.width; ++x) {
            const auto rgb = img.at(r.x0 + x, r.y0 + y);
            out.set(x, y, rgb[0], rgb[1], rgb[2]);
        }
    return out;
}

namespace {

// Separable pass along one axis for both the weighted-depth numerator and
// the weight denominator. Accumulation pairs the two samples mirrored
// around the center before scaling, which keeps the arithmetic exactly
// symmetric: smoothing a mirrored image then equals mirroring the smoothed
// image bit for bit.
void convolve_axis(const std::vector<double>& weights, int stride, int count, int length,
                   std::vector<double>& num, std::vector<double>& den) {
    const int radius = int(weights.size()) - 1;
    std::vector<double> num_line(static_cast<size_t>(length));
    std::vector<double> den_line(static_cast<size_t>(length));
    for (int line = 0; line < count; ++line) {
        const size_t base = size_t(line) * (stride == 1 ? size_t(length) : 1);
        const size_t step = size_t(stride);
        auto idx = [&](int i) { return base + size_t(i) * step; };
        for (int i = 0; i < length; ++i) {
            double n_acc = weights[0] * num[idx(i)];
            double d_acc = weights[0] * den[idx(i)];
            for (int k = 1; k <= radius; ++k) {
                const int lo = i - k;
                const int hi = i + k;
                const double n_pair =
                    (lo >= 0 ? num[idx(lo)] : 0.0) + (hi < length ? num[idx(hi)] : 0.0);
                const double d_pair =
                    (lo >= 0 ? den[idx(lo)] : 0.0) + (hi < length ? den[idx(hi)] : 0.0);
                n_acc += weights[k] * n_pair;
                d_acc += weights[k] * d_pair;
            }
            num_line[size_t(i)] = n_acc;
            den_line[size_t(i)] = d_acc;
        }
        for (int i = 0; i < length; ++i) {
            num[idx(i)] = num_line[size_t(i)];
            den[idx(i)] = den_line[size_t(i)];
        }
    }
}

}  // namespace

core::DepthImage gaussian_smooth_depth(const core::DepthImage& depth, const SmoothSpec& spec) {
    spec.validate();
    const int w = depth.width;
    const int h = depth.height;

    std::vector<double> weights(size_t(spec.radius) + 1);
    for (int k = 0; k <= spec.radius; ++k)
        weights[size_t(k)] = std::exp(-double(k) * double(k) / (2.0 * spec.sigma * spec.sigma));

    // Normalized convolution: convolve validity-masked depth and the
    // validity mask itself, then divide.
    std::vector<double> num(size_t(w) * size_t(h), 0.0);
    std::vector<double> den(size_t(w) * size_t(h), 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (depth.valid_at(x, y)) {
                num[size_t(y) * w + x] = double(depth.at(x, y));
                den[size_t(y) * w + x] = 1.0;
            }

    convolve_axis(weights, 1, h, w, num, den);  // along rows
    convolve_axis(weights, w, w, h, num, den);  // along columns

    core::DepthImage out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const size_t i = size_t(y) * w + x;
            if (den[i] > 0.0) out.at(x, y) = std::uint16_t(std::llround(num[i] / den[i]));
        }
    return out;
}

}  // namespace pave3d::preprocess
