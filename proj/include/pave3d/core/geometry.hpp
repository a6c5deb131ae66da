#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "pave3d/core/camera.hpp"
#include "pave3d/core/image.hpp"

namespace pave3d::core {

/// Unordered 3D points in camera coordinates (mm), optionally colored.
struct PointCloud {
    std::vector<Eigen::Vector3d> points;
    std::vector<std::array<std::uint8_t, 3>> colors;  // empty or same length as points

    bool has_colors() const { return !colors.empty(); }
    size_t size() const { return points.size(); }
};

/// Back-projects pixel (u, v) with depth d (mm) through the pinhole model.
/// Throws InvalidDepth for the 0 sentinel / out-of-range depths and
/// OutOfBounds for pixels outside the sensor.
Eigen::Vector3d unproject(const CameraIntrinsics& intr, int u, int v, std::uint16_t d);

/// Projects a camera-space point to subpixel image coordinates. The result
/// may fall outside the sensor bounds; callers decide what to do with it.
Eigen::Vector2d project(const CameraIntrinsics& intr, const Eigen::Vector3d& p);

/// One point per valid depth pixel, in row-major scan order. When `color`
/// is given it must share the depth resolution and supplies per-point RGB.
PointCloud depth_to_cloud(const DepthImage& depth, const CameraIntrinsics& intr,
                          const ColorImage* color = nullptr);

/// Forward-warps a depth image from the IR camera onto the color camera's
/// pixel grid. extr maps IR coordinates to RGB coordinates. Collisions keep
/// the nearest depth; unmapped target pixels stay invalid.
DepthImage align_depth_to_color(const DepthImage& depth, const CameraIntrinsics& depth_intr,
                                const CameraIntrinsics& color_intr, const RigidTransform& extr);

}  // namespace pave3d::core
