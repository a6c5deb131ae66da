#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pave3d/core/camera.hpp"
#include "pave3d/core/image.hpp"

namespace pave3d::dataio {

enum class TravelAxis { x, y };

std::string to_string(TravelAxis axis);
TravelAxis travel_axis_from_string(const std::string& s);

enum class DefectKind { rut, pothole };

std::string to_string(DefectKind kind);
DefectKind defect_kind_from_string(const std::string& s);

/// True defect dimensions used by the synthetic generator and by the
/// accuracy evaluation. Lengths in mm; center position in meters
/// (station = longitudinal, offset = transverse from the lane center).
struct GroundTruthDefect {
    DefectKind kind = DefectKind::pothole;
    double depth_mm = 0.0;
    double width_mm = 0.0;   // transverse extent
    double length_mm = 0.0;  // longitudinal extent
    double station_m = 0.0;
    double offset_m = 0.0;

    void validate() const {
        if (depth_mm <= 0.0 || width_mm <= 0.0 || length_mm <= 0.0)
            throw ValidationError("ground-truth defect dimensions must be positive");
    }
};

struct FrameEntry {
    int index = 0;
    std::string color_path;  // relative to the dataset root
    std::string depth_path;
};

/// Dataset description persisted as root/manifest.json. When `extrinsic`
/// is absent the frames are flagged pre-registered (depth already on the
/// color grid).
struct DatasetManifest {
    int version = 1;
    std::vector<FrameEntry> frames;
    core::CameraIntrinsics depth_intrinsics;
    core::CameraIntrinsics color_intrinsics;
    std::optional<core::RigidTransform> extrinsic;  // IR -> RGB; nullopt = pre-registered
    TravelAxis travel_axis = TravelAxis::y;
    std::vector<GroundTruthDefect> ground_truth;

    bool preregistered() const { return !extrinsic.has_value(); }
};

/// Loads manifest + all frames, validating resolutions against the
/// manifest intrinsics.
std::pair<DatasetManifest, std::vector<core::RGBDFrame>> read_dataset(const std::filesystem::path& root);

/// Validates manifest/frames consistency, then writes manifest.json and
/// one PPM/PGM pair per frame. Byte-deterministic for identical input.
void write_dataset(const DatasetManifest& manifest, const std::vector<core::RGBDFrame>& frames,
                   const std::filesystem::path& root);

}  // namespace pave3d::dataio
