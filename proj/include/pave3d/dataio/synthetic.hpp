#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "pave3d/dataio/dataset.hpp"

namespace pave3d::dataio {

/// Parameters of the synthetic pavement scene. The generator renders a
/// nadir camera translated along the travel axis over an analytic height
/// field, so every dataset carries exact ground truth for the metrology
/// tests.
struct SynthSpec {
    double lane_width_m = 3.65;
    double camera_height_mm = 1000.0;
    double slope_x = 0.0;  // transverse grade (unitless)
    double slope_y = 0.0;  // longitudinal grade
    int frame_count = 8;
    double overlap_fraction = 0.75;
    double noise_sigma0_mm = 1.0;      // axial noise sigma(d) = sigma0 + k * d^2
    double noise_k_per_mm = 1.5e-6;
    std::uint64_t texture_seed = 1;
    std::vector<GroundTruthDefect> defects;
    std::uint64_t seed = 0;

    int image_width = 640;
    int image_height = 480;
    double fx = 580.0;
    double fy = 580.0;
    double ir_rgb_baseline_mm = 0.0;  // 0 = frames written pre-registered
    TravelAxis travel_axis = TravelAxis::y;

    void validate() const;

    core::CameraIntrinsics intrinsics() const {
        core::CameraIntrinsics intr;
        intr.fx = fx;
        intr.fy = fy;
        intr.cx = (image_width - 1) / 2.0;
        intr.cy = (image_height - 1) / 2.0;
        intr.width = image_width;
        intr.height = image_height;
        return intr;
    }

    double travel_focal() const { return travel_axis == TravelAxis::y ? fy : fx; }
    int travel_pixels() const { return travel_axis == TravelAxis::y ? image_height : image_width; }

    /// Camera advance between consecutive frames, in reference pixels / mm.
    double step_px() const { return (1.0 - overlap_fraction) * travel_pixels(); }
    double step_mm() const { return step_px() * (camera_height_mm / travel_focal()); }
};

/// Analytic pavement surface: tilt plane minus defect depressions. Heights
/// are mm above the z = 0 datum; the camera flies at camera_height above
/// the datum. Public so tests can evaluate the exact ground truth.
class SyntheticField {
public:
    explicit SyntheticField(const SynthSpec& spec);

    double plane_mm(double lateral_mm, double longitudinal_mm) const;
    /// Total defect depression at the point, >= 0.
    double depression_mm(double lateral_mm, double longitudinal_mm) const;
    double height_mm(double lateral_mm, double longitudinal_mm) const {
        return plane_mm(lateral_mm, longitudinal_mm) - depression_mm(lateral_mm, longitudinal_mm);
    }
    /// Depression normalized by each defect's own depth, used to darken
    /// the rendered texture inside defects. In [0, ~1].
    double defect_shade(double lateral_mm, double longitudinal_mm) const;

private:
    double slope_x_;
    double slope_y_;
    std::vector<GroundTruthDefect> defects_;
};

/// Procedural asphalt albedo: multi-octave value noise plus sparse bright /
/// dark speckle, a pure function of world position and the texture seed.
double synthetic_albedo(double lateral_mm, double longitudinal_mm, std::uint64_t texture_seed);

/// Renders the full dataset. Deterministic: identical specs give byte-
/// identical datasets once written.
std::pair<DatasetManifest, std::vector<core::RGBDFrame>> generate_synthetic(const SynthSpec& spec);

}  // namespace pave3d::dataio
