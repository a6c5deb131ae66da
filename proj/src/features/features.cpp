#include "pave3d/features/features.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

namespace pave3d::features {

namespace {

constexpr double kPi = 3.14159265358979323846;

}  // namespace

double IntegralImage::box_sum(int row, int col, int rows, int cols) const {
    const int r1 = std::clamp(row, 0, height);
    const int c1 = std::clamp(col, 0, width);
    const int r2 = std::clamp(row + rows, 0, height);
    const int c2 = std::clamp(col + cols, 0, width);
    if (r2 <= r1 || c2 <= c1) return 0.0;
    const auto* s = sums.data();
    const size_t stride = size_t(width) + 1;
    return s[size_t(r2) * stride + c2] - s[size_t(r1) * stride + c2] -
           s[size_t(r2) * stride + c1] + s[size_t(r1) * stride + c1];
}

IntegralImage integral_from_gray(const std::vector<double>& gray, int w, int h) {
    if (w <= 0 || h <= 0) throw EmptyImage("integral image needs a nonempty source");
    if (gray.size() != size_t(w) * size_t(h))
        throw ValidationError("grayscale buffer size does not match dimensions");
    IntegralImage ii;
    ii.width = w;
    ii.height = h;
    ii.sums.assign((size_t(w) + 1) * (size_t(h) + 1), 0.0);
    const size_t stride = size_t(w) + 1;
    for (int y = 0; y < h; ++y) {
        double run = 0.0;
        for (int x = 0; x < w; ++x) {
            run += gray[size_t(y) * w + x];
            ii.sums[size_t(y + 1) * stride + (x + 1)] = ii.sums[size_t(y) * stride + (x + 1)] + run;
        }
    }
    return ii;
}

IntegralImage integral_image(const core::ColorImage& img) {
    if (img.width <= 0 || img.height <= 0)
        throw EmptyImage("integral image needs a nonempty source");
    std::vector<double> gray(size_t(img.width) * size_t(img.height));
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const auto rgb = img.at(x, y);
            gray[size_t(y) * img.width + x] =
                0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2];
        }
    return integral_from_gray(gray, img.width, img.height);
}

namespace {

/// Hessian responses of one box-filter size, sampled every `step` pixels.
struct ResponseLayer {
    int filter_size = 0;
    int step = 0;
    int cols = 0;  // sample-grid width
    int rows = 0;  // sample-grid height
    int lo_c = 0, hi_c = -1;  // sample-index range with full filter support
    int lo_r = 0, hi_r = -1;
    std::vector<double> response;
    std::vector<signed char> laplacian;

    double at(int r, int c) const { return response[size_t(r) * cols + c]; }
    signed char lap_at(int r, int c) const { return laplacian[size_t(r) * cols + c]; }
};

ResponseLayer build_layer(const IntegralImage& ii, int filter_size, int step) {
    ResponseLayer layer;
    layer.filter_size = filter_size;
    layer.step = step;
    layer.cols = (ii.width - 1) / step + 1;
    layer.rows = (ii.height - 1) / step + 1;
    layer.response.assign(size_t(layer.cols) * size_t(layer.rows), 0.0);
    layer.laplacian.assign(layer.response.size(), 0);

    const int border = (filter_size - 1) / 2;
    const int lobe = filter_size / 3;
    const double inv_area = 1.0 / (double(filter_size) * double(filter_size));

    layer.lo_c = (border + step - 1) / step;
    layer.hi_c = (ii.width - 1 - border) / step;
    layer.lo_r = (border + step - 1) / step;
    layer.hi_r = (ii.height - 1 - border) / step;

    for (int ri = layer.lo_r; ri <= layer.hi_r; ++ri) {
        const int r = ri * step;
        for (int ci = layer.lo_c; ci <= layer.hi_c; ++ci) {
            const int c = ci * step;
            const double dxx =
                (ii.box_sum(r - lobe + 1, c - border, 2 * lobe - 1, filter_size) -
                 3.0 * ii.box_sum(r - lobe + 1, c - lobe / 2, 2 * lobe - 1, lobe)) *
                inv_area;
            const double dyy =
                (ii.box_sum(r - border, c - lobe + 1, filter_size, 2 * lobe - 1) -
                 3.0 * ii.box_sum(r - lobe / 2, c - lobe + 1, lobe, 2 * lobe - 1)) *
                inv_area;
            const double dxy = (ii.box_sum(r - lobe, c + 1, lobe, lobe) +
                                ii.box_sum(r + 1, c - lobe, lobe, lobe) -
                                ii.box_sum(r - lobe, c - lobe, lobe, lobe) -
                                ii.box_sum(r + 1, c + 1, lobe, lobe)) *
                               inv_area;
            const size_t i = size_t(ri) * layer.cols + ci;
            layer.response[i] = dxx * dyy - 0.81 * dxy * dxy;
            layer.laplacian[i] = (dxx + dyy >= 0.0) ? 1 : -1;
        }
    }
    return layer;
}

/// Attempts quadratic refinement of a candidate; returns false when the
/// peak lies more than half a sample away (spurious extremum).
bool refine_candidate(const ResponseLayer& b, const ResponseLayer& m, const ResponseLayer& t,
                      int r, int c, Keypoint& kp) {
    auto f = [&](const ResponseLayer& l, int rr, int cc) { return l.at(rr, cc); };

    const Eigen::Vector3d grad(
        (f(m, r, c + 1) - f(m, r, c - 1)) / 2.0, (f(m, r + 1, c) - f(m, r - 1, c)) / 2.0,
        (f(t, r, c) - f(b, r, c)) / 2.0);

    Eigen::Matrix3d hess;
    hess(0, 0) = f(m, r, c + 1) + f(m, r, c - 1) - 2.0 * f(m, r, c);
    hess(1, 1) = f(m, r + 1, c) + f(m, r - 1, c) - 2.0 * f(m, r, c);
    hess(2, 2) = f(t, r, c) + f(b, r, c) - 2.0 * f(m, r, c);
    hess(0, 1) = hess(1, 0) = (f(m, r + 1, c + 1) + f(m, r - 1, c - 1) - f(m, r + 1, c - 1) -
                               f(m, r - 1, c + 1)) /
                              4.0;
    hess(0, 2) = hess(2, 0) =
        (f(t, r, c + 1) + f(b, r, c - 1) - f(t, r, c - 1) - f(b, r, c + 1)) / 4.0;
    hess(1, 2) = hess(2, 1) =
        (f(t, r + 1, c) + f(b, r - 1, c) - f(t, r - 1, c) - f(b, r + 1, c)) / 4.0;

    const Eigen::Vector3d offset = hess.fullPivLu().solve(-grad);
    if (!offset.allFinite() || offset.cwiseAbs().maxCoeff() > 0.5) return false;

    const double size_step = double(t.filter_size - b.filter_size) / 2.0;
    const double size = double(m.filter_size) + offset.z() * size_step;
    kp.x = (double(c) + offset.x()) * m.step;
    kp.y = (double(r) + offset.y()) * m.step;
    kp.scale = 1.2 * size / 9.0;
    kp.response = f(m, r, c) + 0.5 * grad.dot(offset);
    kp.laplacian_sign = m.lap_at(r, c);
    kp.orientation = 0.0;
    return true;
}

double haar_x(const IntegralImage& ii, int row, int col, int radius) {
    return ii.box_sum(row - radius, col, 2 * radius, radius) -
           ii.box_sum(row - radius, col - radius, 2 * radius, radius);
}

double haar_y(const IntegralImage& ii, int row, int col, int radius) {
    return ii.box_sum(row, col - radius, radius, 2 * radius) -
           ii.box_sum(row - radius, col - radius, radius, 2 * radius);
}

double dominant_orientation(const IntegralImage& ii, const Keypoint& kp) {
    const int s = std::max(1, int(std::lround(kp.scale)));
    const int row = int(std::lround(kp.y));
    const int col = int(std::lround(kp.x));

    std::vector<double> res_x, res_y, angle;
    for (int i = -6; i <= 6; ++i)
        for (int j = -6; j <= 6; ++j) {
            if (i * i + j * j >= 36) continue;
            const double g = std::exp(-double(i * i + j * j) / (2.0 * 2.5 * 2.5));
            const double rx = g * haar_x(ii, row + j * s, col + i * s, 2 * s);
            const double ry = g * haar_y(ii, row + j * s, col + i * s, 2 * s);
            res_x.push_back(rx);
            res_y.push_back(ry);
            angle.push_back(std::atan2(ry, rx));
        }

    double best_len = 0.0, best_orientation = 0.0;
    for (double start = 0.0; start < 2.0 * kPi; start += 0.15) {
        const double lo = start - kPi;  // window [lo, lo + pi/3)
        double sum_x = 0.0, sum_y = 0.0;
        for (size_t k = 0; k < angle.size(); ++k) {
            double a = angle[k] - lo;
            a -= 2.0 * kPi * std::floor(a / (2.0 * kPi));  // wrap to [0, 2pi)
            if (a < kPi / 3.0) {
                sum_x += res_x[k];
                sum_y += res_y[k];
            }
        }
        const double len = sum_x * sum_x + sum_y * sum_y;
        if (len > best_len) {
            best_len = len;
            best_orientation = std::atan2(sum_y, sum_x);
        }
    }
    return best_orientation;
}

Descriptor describe_one(const IntegralImage& ii, const Keypoint& kp, bool upright) {
    const double s = kp.scale;
    const int si = std::max(1, int(std::lround(s)));
    const double co = upright ? 1.0 : std::cos(kp.orientation);
    const double sn = upright ? 0.0 : std::sin(kp.orientation);

    Descriptor desc;
    size_t out = 0;
    for (int gy = 0; gy < 4; ++gy)
        for (int gx = 0; gx < 4; ++gx) {
            double sum_dx = 0.0, sum_adx = 0.0, sum_dy = 0.0, sum_ady = 0.0;
            for (int ly = 0; ly < 5; ++ly)
                for (int lx = 0; lx < 5; ++lx) {
                    // Sample offsets in scale units, centered on the keypoint.
                    const double fx = double(gx * 5 + lx) - 9.5;
                    const double fy = double(gy * 5 + ly) - 9.5;
                    const double px = kp.x + (co * fx - sn * fy) * s;
                    const double py = kp.y + (sn * fx + co * fy) * s;
                    const double rx = haar_x(ii, int(std::lround(py)), int(std::lround(px)), si);
                    const double ry = haar_y(ii, int(std::lround(py)), int(std::lround(px)), si);
                    const double w = std::exp(-(fx * fx + fy * fy) / (2.0 * 3.3 * 3.3));
                    // Rotate the responses into the keypoint frame.
                    const double dx = w * (co * rx + sn * ry);
                    const double dy = w * (-sn * rx + co * ry);
                    sum_dx += dx;
                    sum_adx += std::abs(dx);
                    sum_dy += dy;
                    sum_ady += std::abs(dy);
                }
            desc.v[out++] = sum_dx;
            desc.v[out++] = sum_adx;
            desc.v[out++] = sum_dy;
            desc.v[out++] = sum_ady;
        }

    double norm2 = 0.0;
    for (double c : desc.v) norm2 += c * c;
    const double norm = std::sqrt(norm2);
    if (norm > 0.0)
        for (double& c : desc.v) c /= norm;
    return desc;
}

}  // namespace

std::vector<Keypoint> detect_surf(const IntegralImage& ii, double hessian_threshold,
                                  int octaves) {
    if (octaves < 1) throw ValidationError("detector needs at least one octave");
    const int min_dim = 8 << octaves;
    if (ii.width < min_dim || ii.height < min_dim)
        throw ImageTooSmall("image " + std::to_string(ii.width) + "x" +
                            std::to_string(ii.height) + " is under the " +
                            std::to_string(min_dim) + " px minimum for " +
                            std::to_string(octaves) + " octaves");

    std::vector<Keypoint> keypoints;
    for (int octave = 0; octave < octaves; ++octave) {
        const int step = 2 << octave;
        const int base = 6 << octave;  // filter-size increment in this octave
        // Filter sizes: 9,15,21,27 in octave 0; each octave starts at the
        // previous one's second size and doubles the increment.
        const int start = 9 + 6 * ((1 << octave) - 1);
        ResponseLayer layers[4] = {
            build_layer(ii, start, step), build_layer(ii, start + base, step),
            build_layer(ii, start + 2 * base, step), build_layer(ii, start + 3 * base, step)};

        for (int tri = 0; tri < 2; ++tri) {
            const ResponseLayer& b = layers[tri];
            const ResponseLayer& m = layers[tri + 1];
            const ResponseLayer& t = layers[tri + 2];
            // Candidates need all 27 samples inside the top layer's support.
            const int lo_r = t.lo_r + 1, hi_r = t.hi_r - 1;
            const int lo_c = t.lo_c + 1, hi_c = t.hi_c - 1;
            for (int r = lo_r; r <= hi_r; ++r)
                for (int c = lo_c; c <= hi_c; ++c) {
                    const double v = m.at(r, c);
                    if (v <= hessian_threshold) continue;
                    bool is_max = true;
                    for (int dr = -1; dr <= 1 && is_max; ++dr)
                        for (int dc = -1; dc <= 1 && is_max; ++dc) {
                            if (b.at(r + dr, c + dc) >= v || t.at(r + dr, c + dc) >= v)
                                is_max = false;
                            if ((dr != 0 || dc != 0) && m.at(r + dr, c + dc) >= v)
                                is_max = false;
                        }
                    if (!is_max) continue;
                    Keypoint kp;
                    if (refine_candidate(b, m, t, r, c, kp)) keypoints.push_back(kp);
                }
        }
    }

    std::sort(keypoints.begin(), keypoints.end(), [](const Keypoint& a, const Keypoint& b) {
        if (a.response != b.response) return a.response > b.response;
        if (a.y != b.y) return a.y < b.y;
        if (a.x != b.x) return a.x < b.x;
        return a.scale < b.scale;
    });
    return keypoints;
}

DescribeResult describe_surf(const IntegralImage& ii, const std::vector<Keypoint>& kps,
                             bool upright) {
    DescribeResult result;
    for (size_t i = 0; i < kps.size(); ++i) {
        Keypoint kp = kps[i];
        // The sampling window must fit: corners reach 9.5 * sqrt(2) scales
        // when rotated, plus the Haar filter radius; the orientation pass
        // reaches 6 scales plus a 2-scale filter.
        const double reach = upright ? 9.5 + 1.0 : 9.5 * 1.4142135623730951 + 1.0;
        const double margin = std::max(reach * kp.scale, 8.0 * kp.scale) + 2.0;
        if (kp.x < margin || kp.y < margin || kp.x >= ii.width - margin ||
            kp.y >= ii.height - margin) {
            ++result.dropped_count;
            continue;
        }
        if (!upright) kp.orientation = dominant_orientation(ii, kp);
        result.descriptors.push_back(describe_one(ii, kp, upright));
        result.kept_indices.push_back(i);
    }
    return result;
}

std::vector<Match> match_descriptors(const std::vector<Descriptor>& query,
                                     const std::vector<Descriptor>& train,
                                     double ratio_threshold) {
    if (query.empty() || train.empty())
        throw EmptyDescriptorSet("descriptor matching needs nonempty query and train sets");
    if (ratio_threshold <= 0.0 || ratio_threshold > 1.0)
        throw ValidationError("ratio threshold must lie in (0, 1]");

    std::vector<Match> matches;
    for (size_t qi = 0; qi < query.size(); ++qi) {
        double best = std::numeric_limits<double>::infinity();
        double second = std::numeric_limits<double>::infinity();
        size_t best_ti = 0;
        for (size_t ti = 0; ti < train.size(); ++ti) {
            double d2 = 0.0;
            for (int k = 0; k < 64; ++k) {
                const double d = query[qi].v[size_t(k)] - train[ti].v[size_t(k)];
                d2 += d * d;
            }
            if (d2 < best) {
                second = best;
                best = d2;
                best_ti = ti;
            } else if (d2 < second) {
                second = d2;
            }
        }
        double ratio;
        if (train.size() == 1) {
            ratio = 0.0;
        } else if (second == 0.0) {
            ratio = 1.0;  // duplicate train descriptors: ambiguous
        } else {
            ratio = std::sqrt(best / second);
        }
        if (ratio < ratio_threshold) {
            Match m;
            m.query_index = int(qi);
            m.train_index = int(best_ti);
            m.distance = std::sqrt(best);
            m.ratio = ratio;
            matches.push_back(m);
        }
    }
    return matches;
}

}  // namespace pave3d::features
