#include "pave3d/dataio/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace pave3d::dataio {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t hash_cell(std::int64_t ix, std::int64_t iy, std::uint64_t seed) {
    std::uint64_t h = splitmix64(std::uint64_t(ix) * 0x9e3779b97f4a7c15ull + seed);
    h = splitmix64(h ^ (std::uint64_t(iy) * 0xc2b2ae3d27d4eb4full));
    return h;
}

double hash01(std::uint64_t h) { return double(h >> 11) * 0x1.0p-53; }

double smootherstep(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

// One octave of lattice value noise in [-1, 1].
double value_noise(double x, double y, double cell_mm, std::uint64_t seed) {
    const double gx = x / cell_mm;
    const double gy = y / cell_mm;
    const double fx = std::floor(gx);
    const double fy = std::floor(gy);
    const auto ix = std::int64_t(fx);
    const auto iy = std::int64_t(fy);
    const double tx = smootherstep(gx - fx);
    const double ty = smootherstep(gy - fy);
    const double v00 = hash01(hash_cell(ix, iy, seed)) * 2.0 - 1.0;
    const double v10 = hash01(hash_cell(ix + 1, iy, seed)) * 2.0 - 1.0;
    const double v01 = hash01(hash_cell(ix, iy + 1, seed)) * 2.0 - 1.0;
    const double v11 = hash01(hash_cell(ix + 1, iy + 1, seed)) * 2.0 - 1.0;
    const double a = v00 + (v10 - v00) * tx;
    const double b = v01 + (v11 - v01) * tx;
    return a + (b - a) * ty;
}

// Sparse bright/dark dots anchored to a 6 mm world lattice; roughly 5% of
// cells carry one. Fine-grained detail that distinguishes otherwise similar
// neighborhoods without spawning blob detections of its own.
double speckle(double x, double y, std::uint64_t seed) {
    constexpr double cell = 6.0;
    const auto cx = std::int64_t(std::floor(x / cell));
    const auto cy = std::int64_t(std::floor(y / cell));
    double out = 0.0;
    for (std::int64_t iy = cy - 1; iy <= cy + 1; ++iy) {
        for (std::int64_t ix = cx - 1; ix <= cx + 1; ++ix) {
            const std::uint64_t h = hash_cell(ix, iy, seed ^ 0x5bec7ca7e5eedull);
            if (hash01(h) >= 0.05) continue;
            const std::uint64_t h2 = splitmix64(h);
            const std::uint64_t h3 = splitmix64(h2);
            const double px = (double(ix) + hash01(h2)) * cell;
            const double py = (double(iy) + hash01(h3)) * cell;
            const double r = 1.2 + 1.8 * hash01(splitmix64(h3));
            const double dx = x - px;
            const double dy = y - py;
            const double d2 = dx * dx + dy * dy;
            if (d2 >= r * r) continue;
            const double amp = (h & 1) ? 32.0 : -28.0;
            const double falloff = 1.0 - d2 / (r * r);
            out += amp * falloff;
        }
    }
    return out;
}

// Aggregate stones on a jittered 30 mm lattice; roughly half of the cells
// carry one elliptical Gaussian spot. Sizes (sigma 4-8.5 mm, i.e. 2.3-4.9 px
// at the default 1.72 mm/px footprint, stretched up to 1.8x per axis) and
// contrasts are tuned so a healthy share of the dark stones clears a blob
// detector's default response threshold, while a bright sub-population and
// the shape variety keep descriptor neighborhoods distinguishable. Stones
// stay anchored to world coordinates.
double aggregate(double x, double y, std::uint64_t seed) {
    constexpr double cell = 30.0;
    const auto cx = std::int64_t(std::floor(x / cell));
    const auto cy = std::int64_t(std::floor(y / cell));
    double out = 0.0;
    for (std::int64_t iy = cy - 2; iy <= cy + 2; ++iy) {
        for (std::int64_t ix = cx - 2; ix <= cx + 2; ++ix) {
            const std::uint64_t h = hash_cell(ix, iy, seed ^ 0xa66e57a7e5ull);
            if (hash01(h) >= 0.55) continue;
            const std::uint64_t h2 = splitmix64(h);
            const std::uint64_t h3 = splitmix64(h2);
            const std::uint64_t h4 = splitmix64(h3);
            const std::uint64_t h5 = splitmix64(h4);
            const std::uint64_t h6 = splitmix64(h5);
            const std::uint64_t h7 = splitmix64(h6);
            const std::uint64_t h8 = splitmix64(h7);
            const std::uint64_t h9 = splitmix64(h8);
            const double px = (double(ix) + 0.2 + 0.6 * hash01(h2)) * cell;
            const double py = (double(iy) + 0.2 + 0.6 * hash01(h3)) * cell;
            const double base_sigma = 4.0 + 4.5 * hash01(h4);
            const double sx = base_sigma * (1.0 + 0.8 * hash01(h6));
            const double sy = base_sigma * (1.0 + 0.8 * hash01(h7));
            const bool bright = hash01(h8) < 0.35;
            const double contrast =
                bright ? 75.0 + 55.0 * hash01(h5) : -(120.0 + 75.0 * hash01(h5));
            const double theta = kPi * hash01(h9);
            const double ct = std::cos(theta), st = std::sin(theta);
            const double dx = ct * (x - px) + st * (y - py);
            const double dy = -st * (x - px) + ct * (y - py);
            out += contrast *
                   std::exp(-(dx * dx / (2.0 * sx * sx) + dy * dy / (2.0 * sy * sy)));
        }
    }
    return out;
}

struct GaussianRng {
    std::mt19937_64 eng;
    bool has_spare = false;
    double spare = 0.0;

    explicit GaussianRng(std::uint64_t seed) : eng(seed) {}

    double uniform01() { return (double(eng() >> 11) + 0.5) * 0x1.0p-53; }

    double normal() {
        if (has_spare) {
            has_spare = false;
            return spare;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare = r * std::sin(2.0 * kPi * u2);
        has_spare = true;
        return r * std::cos(2.0 * kPi * u2);
    }
};

}  // namespace

void SynthSpec::validate() const {
    if (!(overlap_fraction > 0.0 && overlap_fraction < 1.0))
        throw ValidationError("overlap_fraction must lie in (0, 1)");
    if (camera_height_mm < double(core::DepthImage::kMinValidMm) ||
        camera_height_mm > double(core::DepthImage::kMaxValidMm))
        throw ValidationError("camera_height outside the sensor operating range");
    if (frame_count < 1) throw ValidationError("frame_count must be >= 1");
    if (lane_width_m <= 0.0) throw ValidationError("lane_width must be positive");
    if (noise_sigma0_mm < 0.0 || noise_k_per_mm < 0.0)
        throw ValidationError("noise parameters must be non-negative");
    intrinsics().validate();
    for (const auto& d : defects) {
        d.validate();
        const double half_extent_m = std::abs(d.offset_m) + d.width_mm / 2000.0;
        if (half_extent_m > lane_width_m / 2.0)
            throw DefectOutsideLane("defect at offset " + std::to_string(d.offset_m) +
                                    " m exceeds the lane half-width");
    }
}

SyntheticField::SyntheticField(const SynthSpec& spec)
    : slope_x_(spec.slope_x), slope_y_(spec.slope_y), defects_(spec.defects) {}

double SyntheticField::plane_mm(double lateral_mm, double longitudinal_mm) const {
    return slope_x_ * lateral_mm + slope_y_ * longitudinal_mm;
}

namespace {

// Rut: Gaussian cross-section (sigma = width/4) running longitudinally
// under a flat-topped envelope of the declared length. Pothole: flattened
// super-ellipse bowl of exponent 4, exactly zero outside the declared
// width x length footprint.
double defect_depression(const GroundTruthDefect& d, double lat_mm, double long_mm) {
    const double dx = lat_mm - d.offset_m * 1000.0;
    const double dy = long_mm - d.station_m * 1000.0;
    if (d.kind == DefectKind::rut) {
        const double w = d.width_mm / 4.0;
        const double cross = std::exp(-(dx * dx) / (2.0 * w * w));
        const double ny = dy / (d.length_mm / 2.0);
        const double n2 = ny * ny;
        const double envelope = std::exp(-(n2 * n2 * n2 * n2));  // ny^8
        return d.depth_mm * cross * envelope;
    }
    const double nx = dx / (d.width_mm / 2.0);
    const double ny = dy / (d.length_mm / 2.0);
    const double r2 = nx * nx + ny * ny;
    if (r2 >= 1.0) return 0.0;
    return d.depth_mm * (1.0 - r2 * r2);
}

}  // namespace

double SyntheticField::depression_mm(double lateral_mm, double longitudinal_mm) const {
    double total = 0.0;
    for (const auto& d : defects_) total += defect_depression(d, lateral_mm, longitudinal_mm);
    return total;
}

double SyntheticField::defect_shade(double lateral_mm, double longitudinal_mm) const {
    double shade = 0.0;
    for (const auto& d : defects_)
        shade += defect_depression(d, lateral_mm, longitudinal_mm) / d.depth_mm;
    return shade;
}

double synthetic_albedo(double lateral_mm, double longitudinal_mm, std::uint64_t texture_seed) {
    double g = 165.0;
    g += 20.0 * value_noise(lateral_mm, longitudinal_mm, 64.0, texture_seed);
    g += 13.0 * value_noise(lateral_mm, longitudinal_mm, 24.0, texture_seed ^ 0xa5a5a5a5ull);
    g += 9.0 * value_noise(lateral_mm, longitudinal_mm, 9.0, texture_seed ^ 0x0f0f0f0full);
    g += speckle(lateral_mm, longitudinal_mm, texture_seed);
    g += aggregate(lateral_mm, longitudinal_mm, texture_seed);
    return std::clamp(g, 5.0, 250.0);
}

namespace {

struct NadirRenderer {
    const SynthSpec& spec;
    const SyntheticField& field;
    core::CameraIntrinsics intr;

    // World position of the surface point seen by pixel (u, v) of a camera
    // whose optical center sits at (cam_lat_px, cam_long_px) in reference
    // pixels above the datum. Positions come back in pixel units so that
    // overlapping frames of a flat scene sample bitwise-identical world
    // coordinates (and therefore identical texture).
    struct Hit {
        double lat_px;
        double long_px;
        double depth_mm;
    };

    double gsd_lat() const {
        return spec.camera_height_mm / (spec.travel_axis == TravelAxis::y ? spec.fx : spec.fy);
    }
    double gsd_long() const { return spec.camera_height_mm / spec.travel_focal(); }

    Hit trace(double cam_lat_px, double cam_long_px, int u, int v) const {
        double pix_lat, pix_long;
        if (spec.travel_axis == TravelAxis::y) {
            pix_lat = u - intr.cx;
            pix_long = v - intr.cy;
        } else {
            pix_lat = v - intr.cy;
            pix_long = u - intr.cx;
        }
        const double h = spec.camera_height_mm;
        double t = h;
        double lat_px = cam_lat_px + pix_lat;
        double long_px = cam_long_px + pix_long;
        for (int it = 0; it < 6; ++it) {
            const double ratio = t / h;
            lat_px = cam_lat_px + pix_lat * ratio;
            long_px = cam_long_px + pix_long * ratio;
            t = h - field.height_mm(lat_px * gsd_lat(), long_px * gsd_long());
        }
        return {lat_px, long_px, t};
    }
};

}  // namespace

std::pair<DatasetManifest, std::vector<core::RGBDFrame>> generate_synthetic(const SynthSpec& spec) {
    spec.validate();

    const SyntheticField field(spec);
    NadirRenderer renderer{spec, field, spec.intrinsics()};
    const core::CameraIntrinsics intr = spec.intrinsics();
    const double step_px = spec.step_px();
    const bool noiseless = spec.noise_sigma0_mm == 0.0 && spec.noise_k_per_mm == 0.0;

    // RGB camera sits ir_rgb_baseline_mm to the side of the IR camera.
    const double color_cam_lat_px = -spec.ir_rgb_baseline_mm / renderer.gsd_lat();

    std::vector<core::RGBDFrame> frames;
    frames.reserve(size_t(spec.frame_count));
    for (int k = 0; k < spec.frame_count; ++k) {
        const double cam_long_px = double(k) * step_px;
        core::RGBDFrame frame;
        frame.index = k;
        frame.depth = core::DepthImage(spec.image_width, spec.image_height);
        frame.color = core::ColorImage(spec.image_width, spec.image_height);

        GaussianRng rng(splitmix64(spec.seed ^ (0x51e57ull + std::uint64_t(k) * 0x9e3779b97f4a7c15ull)));
        for (int v = 0; v < spec.image_height; ++v) {
            for (int u = 0; u < spec.image_width; ++u) {
                const auto hit = renderer.trace(0.0, cam_long_px, u, v);
                double d = hit.depth_mm;
                if (!noiseless) {
                    const double sigma = spec.noise_sigma0_mm + spec.noise_k_per_mm * d * d;
                    d += sigma * rng.normal();
                }
                const long long q = std::llround(d);
                frame.depth.at(u, v) =
                    (q >= core::DepthImage::kMinValidMm && q <= core::DepthImage::kMaxValidMm)
                        ? std::uint16_t(q)
                        : 0;
            }
        }

        for (int v = 0; v < spec.image_height; ++v) {
            for (int u = 0; u < spec.image_width; ++u) {
                const auto hit = renderer.trace(color_cam_lat_px, cam_long_px, u, v);
                const double lat_mm = hit.lat_px * renderer.gsd_lat();
                const double long_mm = hit.long_px * renderer.gsd_long();
                double g = synthetic_albedo(lat_mm, long_mm, spec.texture_seed);
                const double shade = field.defect_shade(lat_mm, long_mm);
                g *= std::clamp(1.0 - 0.45 * shade, 0.3, 1.0);
                const auto q = std::uint8_t(std::clamp<long long>(std::llround(g), 0, 255));
                frame.color.set(u, v, q, q, q);
            }
        }
        frames.push_back(std::move(frame));
    }

    DatasetManifest manifest;
    manifest.version = 1;
    manifest.depth_intrinsics = intr;
    manifest.color_intrinsics = intr;
    if (spec.ir_rgb_baseline_mm != 0.0) {
        core::RigidTransform extr;
        extr.translation = Eigen::Vector3d(spec.ir_rgb_baseline_mm, 0.0, 0.0);
        manifest.extrinsic = extr;
    }
    manifest.travel_axis = spec.travel_axis;
    manifest.ground_truth = spec.defects;
    char name[64];
    for (int k = 0; k < spec.frame_count; ++k) {
        FrameEntry e;
        e.index = k;
        std::snprintf(name, sizeof(name), "color_%04d.ppm", k);
        e.color_path = name;
        std::snprintf(name, sizeof(name), "depth_%04d.pgm", k);
        e.depth_path = name;
        manifest.frames.push_back(e);
    }
    return {std::move(manifest), std::move(frames)};
}

}  // namespace pave3d::dataio
