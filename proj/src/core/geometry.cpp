#include "pave3d/core/geometry.hpp"

#include <cmath>
#include <limits>

namespace pave3d::core {

Eigen::Vector3d unproject(const CameraIntrinsics& intr, int u, int v, std::uint16_t d) {
    if (u < 0 || u >= intr.width || v < 0 || v >= intr.height)
        throw OutOfBounds("unproject: pixel (" + std::to_string(u) + "," + std::to_string(v) +
                          ") outside " + std::to_string(intr.width) + "x" + std::to_string(intr.height));
    if (!DepthImage::is_valid_depth(d))
        throw InvalidDepth("unproject: depth " + std::to_string(d) + " mm outside sensor range");
    const double z = double(d);
    return {(u - intr.cx) * z / intr.fx, (v - intr.cy) * z / intr.fy, z};
}

Eigen::Vector2d project(const CameraIntrinsics& intr, const Eigen::Vector3d& p) {
    if (!(p.z() > 0.0)) throw NonPositiveDepth("project: z must be positive");
    return {intr.fx * p.x() / p.z() + intr.cx, intr.fy * p.y() / p.z() + intr.cy};
}

PointCloud depth_to_cloud(const DepthImage& depth, const CameraIntrinsics& intr,
                          const ColorImage* color) {
    if (depth.width != intr.width || depth.height != intr.height)
        throw ResolutionMismatch("depth_to_cloud: depth resolution differs from intrinsics");
    if (color && (color->width != depth.width || color->height != depth.height))
        throw ResolutionMismatch("depth_to_cloud: color resolution differs from depth");

    PointCloud cloud;
    cloud.points.reserve(depth.pixels.size());
    if (color) cloud.colors.reserve(depth.pixels.size());
    for (int v = 0; v < depth.height; ++v) {
        for (int u = 0; u < depth.width; ++u) {
            const std::uint16_t d = depth.at(u, v);
            if (!DepthImage::is_valid_depth(d)) continue;
            const double z = double(d);
            cloud.points.emplace_back((u - intr.cx) * z / intr.fx, (v - intr.cy) * z / intr.fy, z);
            if (color) cloud.colors.push_back(color->at(u, v));
        }
    }
    return cloud;
}

DepthImage align_depth_to_color(const DepthImage& depth, const CameraIntrinsics& depth_intr,
                                const CameraIntrinsics& color_intr, const RigidTransform& extr) {
    if (depth.width != depth_intr.width || depth.height != depth_intr.height)
        throw ResolutionMismatch("align_depth_to_color: depth resolution differs from intrinsics");
    extr.validate();

    DepthImage out(color_intr.width, color_intr.height);
    for (int v = 0; v < depth.height; ++v) {
        for (int u = 0; u < depth.width; ++u) {
            const std::uint16_t d = depth.at(u, v);
            if (!DepthImage::is_valid_depth(d)) continue;
            const double z = double(d);
            const Eigen::Vector3d p((u - depth_intr.cx) * z / depth_intr.fx,
                                    (v - depth_intr.cy) * z / depth_intr.fy, z);
            const Eigen::Vector3d q = extr.apply(p);
            if (!(q.z() > 0.0)) continue;
            const double uc = color_intr.fx * q.x() / q.z() + color_intr.cx;
            const double vc = color_intr.fy * q.y() / q.z() + color_intr.cy;
            const int ui = int(std::lround(uc));
            const int vi = int(std::lround(vc));
            if (!out.in_bounds(ui, vi)) continue;
            const double zq = q.z();
            if (zq < double(DepthImage::kMinValidMm) || zq > double(DepthImage::kMaxValidMm)) continue;
            const std::uint16_t dz = std::uint16_t(std::llround(zq));
            std::uint16_t& slot = out.at(ui, vi);
            // z-buffer: keep the nearest surface on collision
            if (slot == 0 || dz < slot) slot = dz;
        }
    }
    return out;
}

}  // namespace pave3d::core
