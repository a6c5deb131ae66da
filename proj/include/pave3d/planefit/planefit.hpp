#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "pave3d/core/camera.hpp"
#include "pave3d/core/geometry.hpp"
#include "pave3d/core/image.hpp"

namespace pave3d::planefit {

/// Total-least-squares plane through a point cloud, in camera coordinates.
struct Plane {
    Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();  // unit, normal.z > 0
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();  // mm
    double rms_residual = 0.0;                           // mm
};

/// Minimal rotation that levels a fitted plane to z = reference_height.
struct LevelingRotation {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    double reference_height = 0.0;  // mm, leveled plane's constant z
};

/// Per-pixel elevation relative to the fitted pavement plane, in mm.
/// Negative = depression below the plane. NaN marks invalid pixels.
struct ElevationImage {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    ElevationImage() = default;
    ElevationImage(int w, int h)
        : width(w), height(h),
          values(size_t(w) * size_t(h), std::numeric_limits<double>::quiet_NaN()) {}

    double at(int x, int y) const { return values[size_t(y) * width + x]; }
    double& at(int x, int y) { return values[size_t(y) * width + x]; }
    bool valid_at(int x, int y) const { return !std::isnan(at(x, y)); }

    size_t valid_count() const {
        size_t n = 0;
        for (double v : values) n += std::isnan(v) ? 0 : 1;
        return n;
    }
};

/// Fits a plane by SVD of the centered point matrix: the normal is the
/// right singular vector of the smallest singular value, oriented so
/// normal.z > 0, and rms_residual = smallest singular value / sqrt(n).
/// Throws TooFewPoints (< 3) or Degenerate (collinear points, or a
/// vertical plane that cannot be canonically oriented).
Plane fit_plane_svd(const core::PointCloud& cloud);

/// Variant that fits, drops the `trim_fraction` of points farthest below
/// the plane (defect candidates), and refits once. Used when defects cover
/// enough area to bias the slope estimate.
Plane fit_plane_trimmed(const core::PointCloud& cloud, double trim_fraction = 0.05);

/// Minimal rotation (about normal x z-hat) taking plane.normal to (0,0,1);
/// reference_height is the rotated centroid's z.
LevelingRotation leveling_rotation(const Plane& plane);

/// Unprojects every valid pixel, rotates it level, and reports elevation
/// e = reference_height - rotated z, so depressions (farther from the
/// camera than the plane) come out negative.
ElevationImage level_frame(const core::DepthImage& depth, const core::CameraIntrinsics& intr,
                           const LevelingRotation& lvl);

}  // namespace pave3d::planefit
