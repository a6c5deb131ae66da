#include "pave3d/stitch/stitch.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

#include <Eigen/Dense>

namespace pave3d::stitch {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct Canvas {
    int origin_x = 0;
    int origin_y = 0;
    int width = 0;
    int height = 0;
};

/// Bounding box of the warped pixel-center corners of every frame.
/// `rects[i]` = (x0, y0, width, height) of frame i in its own color grid.
Canvas canvas_of(const std::vector<std::array<double, 4>>& rects,
                 const std::vector<registration::Homography>& globals) {
    double minx = std::numeric_limits<double>::infinity(), miny = minx;
    double maxx = -minx, maxy = -miny;
    for (size_t i = 0; i < rects.size(); ++i) {
        const auto [x0, y0, w, h] = rects[i];
        const Eigen::Vector2d corners[4] = {{x0, y0},
                                            {x0 + w - 1.0, y0},
                                            {x0, y0 + h - 1.0},
                                            {x0 + w - 1.0, y0 + h - 1.0}};
        for (const auto& c : corners) {
            const Eigen::Vector2d g = registration::apply_homography(globals[i], c);
            minx = std::min(minx, g.x());
            miny = std::min(miny, g.y());
            maxx = std::max(maxx, g.x());
            maxy = std::max(maxy, g.y());
        }
    }
    Canvas cv;
    cv.origin_x = int(std::floor(minx + 1e-6));
    cv.origin_y = int(std::floor(miny + 1e-6));
    cv.width = int(std::ceil(maxx - 1e-6)) - cv.origin_x + 1;
    cv.height = int(std::ceil(maxy - 1e-6)) - cv.origin_y + 1;
    return cv;
}

bool inverse_map(const Eigen::Matrix3d& h_inv, double gx, double gy, double& x, double& y) {
    const Eigen::Vector3d p = h_inv * Eigen::Vector3d(gx, gy, 1.0);
    if (std::abs(p.z()) < 1e-12) return false;
    x = p.x() / p.z();
    y = p.y() / p.z();
    return true;
}

}  // namespace

size_t ElevationMosaic::data_count() const {
    size_t n = 0;
    for (int c : count)
        if (c > 0) ++n;
    return n;
}

std::vector<registration::Homography> chain_transforms(const FrameGraph& graph) {
    if (graph.frame_count < 1) throw EmptyInput("frame graph holds no frames");
    if (int(graph.pairwise.size()) != graph.frame_count - 1)
        throw ValidationError("frame graph needs exactly one pairwise slot per "
                              "consecutive frame pair");
    if (graph.reference_index < 0 || graph.reference_index >= graph.frame_count)
        throw ValidationError("reference frame index out of range");

    auto need = [&](int k) -> const registration::EstimateResult& {
        if (!graph.pairwise[size_t(k)].has_value())
            throw BrokenChain("pairwise transform (" + std::to_string(k) + ", " +
                              std::to_string(k + 1) + ") is missing");
        return *graph.pairwise[size_t(k)];
    };

    std::vector<registration::Homography> globals(size_t(graph.frame_count));
    globals[size_t(graph.reference_index)] = registration::Homography::identity();
    for (int i = graph.reference_index + 1; i < graph.frame_count; ++i) {
        globals[size_t(i)].m = globals[size_t(i - 1)].m * need(i - 1).model.m;
        globals[size_t(i)].canonicalize();
    }
    for (int i = graph.reference_index - 1; i >= 0; --i) {
        globals[size_t(i)].m = globals[size_t(i + 1)].m * need(i).model.inverse().m;
        globals[size_t(i)].canonicalize();
    }
    return globals;
}

RgbMosaic mosaic_rgb(const std::vector<core::ColorImage>& frames,
                     const std::vector<registration::Homography>& globals) {
    if (frames.empty()) throw EmptyInput("color mosaic needs at least one frame");
    if (frames.size() != globals.size())
        throw ResolutionMismatch("one global transform per frame is required");
    for (const auto& f : frames)
        if (f.width <= 0 || f.height <= 0) throw EmptyImage("color frame is empty");

    std::vector<std::array<double, 4>> rects;
    for (const auto& f : frames)
        rects.push_back({0.0, 0.0, double(f.width), double(f.height)});
    const Canvas cv = canvas_of(rects, globals);

    std::vector<Eigen::Matrix3d> inv;
    for (const auto& g : globals) inv.push_back(g.inverse().m);

    RgbMosaic out;
    out.origin_x = cv.origin_x;
    out.origin_y = cv.origin_y;
    out.image = core::ColorImage{cv.width, cv.height};

    for (int row = 0; row < cv.height; ++row) {
        const double gy = row + cv.origin_y;
        for (int col = 0; col < cv.width; ++col) {
            const double gx = col + cv.origin_x;
            double acc[3] = {0.0, 0.0, 0.0};
            double wacc = 0.0;
            for (size_t i = 0; i < frames.size(); ++i) {
                const auto& f = frames[i];
                double x = 0.0, y = 0.0;
                if (!inverse_map(inv[i], gx, gy, x, y)) continue;
                if (x < 0.0 || y < 0.0 || x > f.width - 1.0 || y > f.height - 1.0) continue;
                const int x0 = int(x), y0 = int(y);
                const int x1 = std::min(x0 + 1, f.width - 1);
                const int y1 = std::min(y0 + 1, f.height - 1);
                const double fx = x - x0, fy = y - y0;
                const auto p00 = f.at(x0, y0), p10 = f.at(x1, y0), p01 = f.at(x0, y1),
                           p11 = f.at(x1, y1);
                // Feather: distance to the nearest frame edge, normalized by
                // the largest interior distance so frames of any size blend
                // on equal terms.
                const double edge =
                    std::min(std::min(x, y), std::min(f.width - 1.0 - x, f.height - 1.0 - y)) +
                    0.5;
                const double weight =
                    std::max(edge / (0.5 * std::min(f.width, f.height)), 1e-6);
                for (int ch = 0; ch < 3; ++ch) {
                    const double v = (1 - fx) * (1 - fy) * p00[size_t(ch)] +
                                     fx * (1 - fy) * p10[size_t(ch)] +
                                     (1 - fx) * fy * p01[size_t(ch)] +
                                     fx * fy * p11[size_t(ch)];
                    acc[ch] += weight * v;
                }
                wacc += weight;
            }
            if (wacc > 0.0) {
                const auto quant = [&](double v) {
                    return std::uint8_t(std::clamp<long>(std::lround(v / wacc), 0, 255));
                };
                out.image.set(col, row, quant(acc[0]), quant(acc[1]), quant(acc[2]));
            }
        }
    }
    return out;
}

ElevationMosaic mosaic_elevation(const std::vector<planefit::ElevationImage>& frames,
                                 const std::vector<preprocess::CropRect>& crops,
                                 const std::vector<registration::Homography>& globals,
                                 double gsd_mm, dataio::TravelAxis travel_axis) {
    if (frames.empty()) throw EmptyInput("elevation mosaic needs at least one frame");
    if (frames.size() != globals.size())
        throw ResolutionMismatch("one global transform per frame is required");
    if (!crops.empty() && crops.size() != frames.size())
        throw ResolutionMismatch("crop offsets must match the frame count (or be empty)");
    if (!(gsd_mm > 0.0)) throw GsdNonPositive("ground sample distance must be positive");

    auto offset_of = [&](size_t i) -> std::pair<double, double> {
        if (crops.empty()) return {0.0, 0.0};
        return {double(crops[i].x0), double(crops[i].y0)};
    };

    std::vector<std::array<double, 4>> rects;
    for (size_t i = 0; i < frames.size(); ++i) {
        const auto [ox, oy] = offset_of(i);
        rects.push_back({ox, oy, double(frames[i].width), double(frames[i].height)});
    }
    const Canvas cv = canvas_of(rects, globals);

    std::vector<Eigen::Matrix3d> inv;
    for (const auto& g : globals) inv.push_back(g.inverse().m);

    ElevationMosaic mosaic;
    mosaic.width = cv.width;
    mosaic.height = cv.height;
    mosaic.origin_x = cv.origin_x;
    mosaic.origin_y = cv.origin_y;
    mosaic.gsd_mm = gsd_mm;
    mosaic.travel_axis = travel_axis;
    mosaic.elevation.assign(size_t(cv.width) * size_t(cv.height), kNan);
    mosaic.count.assign(mosaic.elevation.size(), 0);
    std::vector<double> sums(mosaic.elevation.size(), 0.0);

    for (int row = 0; row < cv.height; ++row) {
        const double gy = row + cv.origin_y;
        for (int col = 0; col < cv.width; ++col) {
            const double gx = col + cv.origin_x;
            const size_t at = size_t(row) * cv.width + col;
            for (size_t i = 0; i < frames.size(); ++i) {
                const auto& f = frames[i];
                const auto [ox, oy] = offset_of(i);
                double x = 0.0, y = 0.0;
                if (!inverse_map(inv[i], gx, gy, x, y)) continue;
                x -= ox;
                y -= oy;
                if (x < 0.0 || y < 0.0 || x > f.width - 1.0 || y > f.height - 1.0) continue;
                const int x0 = int(x), y0 = int(y);
                const int x1 = std::min(x0 + 1, f.width - 1);
                const int y1 = std::min(y0 + 1, f.height - 1);
                const double fx = x - x0, fy = y - y0;
                const double w[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy,
                                     fx * fy};
                const double v[4] = {f.at(x0, y0), f.at(x1, y0), f.at(x0, y1), f.at(x1, y1)};
                // Bilinear over the valid neighbors only.
                double num = 0.0, den = 0.0;
                for (int k = 0; k < 4; ++k) {
                    if (!std::isfinite(v[k])) continue;
                    num += w[k] * v[k];
                    den += w[k];
                }
                if (den < 1e-9) continue;
                sums[at] += num / den;
                mosaic.count[at] += 1;
            }
            if (mosaic.count[at] > 0) mosaic.elevation[at] = sums[at] / mosaic.count[at];
        }
    }
    return mosaic;
}

namespace {

void write_ply_header(std::ofstream& out, size_t n, bool with_color) {
    out << "ply\nformat ascii 1.0\nelement vertex " << n
        << "\nproperty float x\nproperty float y\nproperty float z\n";
    if (with_color)
        out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    out << "end_header\n";
}

}  // namespace

void export_ply(const core::PointCloud& cloud, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoFailure("cannot open '" + path + "' for writing");
    write_ply_header(out, cloud.size(), cloud.has_colors());
    char line[128];
    for (size_t i = 0; i < cloud.size(); ++i) {
        const auto& p = cloud.points[i];
        if (cloud.has_colors()) {
            const auto& c = cloud.colors[i];
            std::snprintf(line, sizeof line, "%.4f %.4f %.4f %u %u %u\n", p.x(), p.y(), p.z(),
                          unsigned(c[0]), unsigned(c[1]), unsigned(c[2]));
        } else {
            std::snprintf(line, sizeof line, "%.4f %.4f %.4f\n", p.x(), p.y(), p.z());
        }
        out << line;
    }
    if (!out) throw IoFailure("failed while writing '" + path + "'");
}

void export_ply(const ElevationMosaic& mosaic, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoFailure("cannot open '" + path + "' for writing");
    write_ply_header(out, mosaic.data_count(), false);
    char line[128];
    for (int row = 0; row < mosaic.height; ++row)
        for (int col = 0; col < mosaic.width; ++col) {
            if (!mosaic.has_data(col, row)) continue;
            std::snprintf(line, sizeof line, "%.4f %.4f %.4f\n", col * mosaic.gsd_mm,
                          row * mosaic.gsd_mm, mosaic.at(col, row));
            out << line;
        }
    if (!out) throw IoFailure("failed while writing '" + path + "'");
}

void write_elevation_grid(const ElevationMosaic& mosaic, const std::string& path) {
    if (!(mosaic.gsd_mm > 0.0)) throw GsdNonPositive("mosaic carries a non-positive gsd");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot open '" + path + "' for writing");
    const std::uint32_t w = std::uint32_t(mosaic.width), h = std::uint32_t(mosaic.height);
    const std::int32_t ox = mosaic.origin_x, oy = mosaic.origin_y;
    const std::uint8_t axis = mosaic.travel_axis == dataio::TravelAxis::y ? 1 : 0;
    out.write("ELEV", 4);
    out.write(reinterpret_cast<const char*>(&w), 4);
    out.write(reinterpret_cast<const char*>(&h), 4);
    out.write(reinterpret_cast<const char*>(&mosaic.gsd_mm), 8);
    out.write(reinterpret_cast<const char*>(&ox), 4);
    out.write(reinterpret_cast<const char*>(&oy), 4);
    out.write(reinterpret_cast<const char*>(&axis), 1);
    for (size_t i = 0; i < mosaic.elevation.size(); ++i) {
        const float v = mosaic.count[i] > 0 ? float(mosaic.elevation[i])
                                            : std::numeric_limits<float>::quiet_NaN();
        out.write(reinterpret_cast<const char*>(&v), 4);
    }
    if (!out) throw IoFailure("failed while writing '" + path + "'");
}

ElevationMosaic read_elevation_grid(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFile("cannot open '" + path + "'");
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "ELEV", 4) != 0)
        throw CorruptImage("'" + path + "' is not an elevation grid");
    std::uint32_t w = 0, h = 0;
    double gsd = 0.0;
    std::int32_t ox = 0, oy = 0;
    std::uint8_t axis = 1;
    in.read(reinterpret_cast<char*>(&w), 4);
    in.read(reinterpret_cast<char*>(&h), 4);
    in.read(reinterpret_cast<char*>(&gsd), 8);
    in.read(reinterpret_cast<char*>(&ox), 4);
    in.read(reinterpret_cast<char*>(&oy), 4);
    in.read(reinterpret_cast<char*>(&axis), 1);
    if (!in) throw CorruptImage("'" + path + "' has a truncated header");
    if (w == 0 || h == 0 || w > (1u << 20) || h > (1u << 20))
        throw CorruptImage("'" + path + "' has implausible dimensions");
    if (!(gsd > 0.0)) throw GsdNonPositive("'" + path + "' has a non-positive gsd");

    ElevationMosaic mosaic;
    mosaic.width = int(w);
    mosaic.height = int(h);
    mosaic.gsd_mm = gsd;
    mosaic.origin_x = ox;
    mosaic.origin_y = oy;
    mosaic.travel_axis = axis ? dataio::TravelAxis::y : dataio::TravelAxis::x;
    mosaic.elevation.resize(size_t(w) * h);
    mosaic.count.resize(mosaic.elevation.size());
    for (size_t i = 0; i < mosaic.elevation.size(); ++i) {
        float v = 0.0f;
        in.read(reinterpret_cast<char*>(&v), 4);
        if (!in) throw CorruptImage("'" + path + "' has truncated elevation data");
        const bool ok = std::isfinite(v);
        mosaic.elevation[i] = ok ? double(v) : kNan;
        mosaic.count[i] = ok ? 1 : 0;
    }
    return mosaic;
}

}  // namespace pave3d::stitch
