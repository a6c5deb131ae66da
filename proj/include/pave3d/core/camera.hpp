#pragma once

#include <Eigen/Core>
#include <Eigen/LU>

#include "pave3d/errors.hpp"

namespace pave3d::core {

/// Pinhole parameters. Convention: x right, y down, z along the optical
/// axis; depth values are z (not ray length), in millimeters.
struct CameraIntrinsics {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;

    void validate() const {
        if (fx <= 0.0 || fy <= 0.0) throw ValidationError("intrinsics: focal lengths must be positive");
        if (width <= 0 || height <= 0) throw ValidationError("intrinsics: resolution must be positive");
        if (cx < 0.0 || cx >= width) throw ValidationError("intrinsics: cx outside sensor");
        if (cy < 0.0 || cy >= height) throw ValidationError("intrinsics: cy outside sensor");
    }
};

/// Rigid motion (rotation + translation in millimeters), used for the
/// IR-to-RGB extrinsic. Orthonormality is enforced to 1e-9.
struct RigidTransform {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    static constexpr double kOrthoTol = 1e-9;

    void validate() const {
        const Eigen::Matrix3d rtr = rotation.transpose() * rotation;
        if ((rtr - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > kOrthoTol)
            throw ValidationError("rigid transform: rotation is not orthonormal");
        if (std::abs(rotation.determinant() - 1.0) > kOrthoTol)
            throw ValidationError("rigid transform: rotation determinant is not +1");
    }

    Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }

    RigidTransform compose(const RigidTransform& inner) const {
        RigidTransform out;
        out.rotation = rotation * inner.rotation;
        out.translation = rotation * inner.translation + translation;
        out.validate();
        return out;
    }

    RigidTransform inverse() const {
        RigidTransform out;
        out.rotation = rotation.transpose();
        out.translation = -(rotation.transpose() * translation);
        return out;
    }
};

}  // namespace pave3d::core
