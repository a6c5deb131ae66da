#include "pave3d/planefit/planefit.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Geometry>
#include <Eigen/SVD>

namespace pave3d::planefit {

namespace {

Plane fit_points(const std::vector<Eigen::Vector3d>& points) {
    const size_t n = points.size();
    if (n < 3) throw TooFewPoints("plane fit needs at least 3 points, got " + std::to_string(n));

    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (const auto& p : points) centroid += p;
    centroid /= double(n);

    Eigen::MatrixXd centered(long(n), 3);
    for (size_t i = 0; i < n; ++i) centered.row(long(i)) = (points[i] - centroid).transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    const Eigen::Vector3d s = svd.singularValues();  // descending

    // Collinear (or coincident) points: the second singular value vanishes
    // relative to the first, so the in-plane directions are not determined.
    if (s(1) <= 1e-9 * s(0))
        throw Degenerate("points are collinear; the plane is not determined");

    Plane plane;
    plane.centroid = centroid;
    plane.normal = svd.matrixV().col(2);
    plane.rms_residual = s(2) / std::sqrt(double(n));
    if (plane.normal.z() < 0.0) plane.normal = -plane.normal;
    if (plane.normal.z() == 0.0)
        throw Degenerate("fitted plane is vertical; cannot orient normal.z > 0");
    return plane;
}

}  // namespace

Plane fit_plane_svd(const core::PointCloud& cloud) { return fit_points(cloud.points); }

Plane fit_plane_trimmed(const core::PointCloud& cloud, double trim_fraction) {
    if (trim_fraction < 0.0 || trim_fraction >= 1.0)
        throw ValidationError("trim fraction must lie in [0, 1)");
    const Plane first = fit_points(cloud.points);
    if (trim_fraction == 0.0) return first;

    // Signed height above the plane; defects sit below (negative).
    std::vector<double> height(cloud.points.size());
    for (size_t i = 0; i < cloud.points.size(); ++i)
        height[i] = -first.normal.dot(cloud.points[i] - first.centroid);

    std::vector<double> sorted = height;
    const size_t cut = size_t(double(sorted.size()) * trim_fraction);
    if (cut == 0) return first;
    std::nth_element(sorted.begin(), sorted.begin() + long(cut), sorted.end());
    const double threshold = sorted[cut];

    std::vector<Eigen::Vector3d> kept;
    kept.reserve(cloud.points.size() - cut);
    for (size_t i = 0; i < cloud.points.size(); ++i)
        if (height[i] >= threshold) kept.push_back(cloud.points[i]);
    return fit_points(kept);
}

LevelingRotation leveling_rotation(const Plane& plane) {
    LevelingRotation lvl;
    const Eigen::Vector3d z = Eigen::Vector3d::UnitZ();
    const Eigen::Vector3d axis = plane.normal.cross(z);
    const double sin_angle = axis.norm();
    const double cos_angle = plane.normal.dot(z);
    if (sin_angle < 1e-15) {
        // normal.z > 0 means the normal already points along +z.
        lvl.rotation = Eigen::Matrix3d::Identity();
    } else {
        const Eigen::Vector3d k = axis / sin_angle;
        Eigen::Matrix3d K;
        K << 0, -k.z(), k.y(), k.z(), 0, -k.x(), -k.y(), k.x(), 0;
        lvl.rotation =
            Eigen::Matrix3d::Identity() + sin_angle * K + (1.0 - cos_angle) * K * K;
    }
    lvl.reference_height = (lvl.rotation * plane.centroid).z();
    return lvl;
}

ElevationImage level_frame(const core::DepthImage& depth, const core::CameraIntrinsics& intr,
                           const LevelingRotation& lvl) {
    if (depth.width != intr.width || depth.height != intr.height)
        throw ResolutionMismatch("depth frame does not match the intrinsics resolution");
    ElevationImage out(depth.width, depth.height);
    const Eigen::Matrix3d& r = lvl.rotation;
    for (int v = 0; v < depth.height; ++v)
        for (int u = 0; u < depth.width; ++u) {
            if (!depth.valid_at(u, v)) continue;
            const double d = double(depth.at(u, v));
            const double x = (u - intr.cx) * d / intr.fx;
            const double y = (v - intr.cy) * d / intr.fy;
            const double rz = r(2, 0) * x + r(2, 1) * y + r(2, 2) * d;
            out.at(u, v) = lvl.reference_height - rz;
        }
    return out;
}

}  // namespace pave3d::planefit
