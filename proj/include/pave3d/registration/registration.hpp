#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "pave3d/errors.hpp"

namespace pave3d::registration {

/// One source -> target point correspondence in pixel coordinates.
struct PointPair {
    Eigen::Vector2d source = Eigen::Vector2d::Zero();
    Eigen::Vector2d target = Eigen::Vector2d::Zero();
};

/// Plane projective transform. Canonical scale: h33 = 1 when it is
/// meaningfully nonzero, otherwise unit Frobenius norm.
struct Homography {
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();

    static Homography identity() { return {}; }
    static Homography translation(double tx, double ty);

    /// Rescales to canonical form and checks invertibility.
    /// Throws DegenerateConfiguration if |det| <= 1e-12 after scaling.
    void canonicalize();

    Homography inverse() const;
};

/// Perspective-divide application. Throws PointAtInfinity when the
/// homogeneous w falls below 1e-12 in magnitude.
Eigen::Vector2d apply_homography(const Homography& h, const Eigen::Vector2d& p);

/// Transform family fitted inside the robust loop.
enum class TransformFamily {
    projective,  ///< 8 DOF, minimal sample 4
    similarity,  ///< 4 DOF (scale, rotation, translation), minimal sample 2
};

struct MsacConfig {
    double threshold = 1.5;       ///< inlier reprojection distance T, px
    int max_iterations = 2000;
    double confidence = 0.99;
    std::uint64_t seed = 0;
    bool symmetric_residual = false;  ///< forward-only by default
    TransformFamily family = TransformFamily::projective;

    void validate() const;
};

struct EstimateResult {
    Homography model;
    std::vector<int> inlier_indices;   ///< residual < threshold under `model`
    double score = 0.0;                ///< sum of min(r^2, T^2) under `model`
    int iterations_run = 0;
    std::vector<double> score_trace;   ///< best score after each accepted hypothesis
};

/// Direct linear transform with Hartley isotropic normalization of both
/// point sets. Throws TooFewPairs (< 4) and DegenerateConfiguration
/// (3 collinear source points in a minimal set, or rank-deficient system).
Homography estimate_homography_dlt(const std::vector<PointPair>& pairs);

/// Least-squares similarity transform (scale * rotation + translation).
/// Throws TooFewPairs (< 2) and DegenerateConfiguration (coincident
/// source points).
Homography estimate_similarity_ls(const std::vector<PointPair>& pairs);

/// MSAC robust score of a model: sum of min(r^2, T^2) over all pairs, where
/// r is the forward (or symmetric, per cfg) reprojection distance. Points
/// mapped to infinity contribute the outlier penalty T^2.
double msac_score(const Homography& h, const std::vector<PointPair>& pairs,
                  const MsacConfig& cfg);

/// Robust transform estimation: seeded uniform sampling, degenerate-sample
/// rejection, MSAC scoring, adaptive iteration bound, and a final
/// least-squares refit on the inliers that is kept only when it does not
/// worsen either the inlier RMS or the robust score.
/// Throws TooFewPairs and NoValidModel (every sample degenerate).
EstimateResult msac_homography(const std::vector<PointPair>& pairs, const MsacConfig& cfg = {});

}  // namespace pave3d::registration
