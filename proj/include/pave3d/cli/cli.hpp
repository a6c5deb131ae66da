#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pave3d/analyze/analyze.hpp"
#include "pave3d/dataio/dataset.hpp"
#include "pave3d/features/features.hpp"
#include "pave3d/planefit/planefit.hpp"
#include "pave3d/preprocess/preprocess.hpp"
#include "pave3d/registration/registration.hpp"
#include "pave3d/stitch/stitch.hpp"

namespace pave3d::cli {

/// Every stage parameter in one place. Defaults mirror the owning module's
/// documented defaults, so CLI flags, reports, and library calls stay in
/// sync.
struct PipelineConfig {
    // preprocess
    preprocess::RoiSpec roi{};        // centered crop fractions, 0.8 x 0.8
    preprocess::SmoothSpec smooth{};  // sigma 1.5 px, radius 3
    // planefit
    double trim_fraction = 0.05;
    // features
    double surf_threshold = 600.0;
    int surf_octaves = 3;
    bool surf_upright = true;
    double ratio_threshold = 0.7;
    // registration
    registration::MsacConfig msac{};  // T 1.5 px, 2000 iters, conf 0.99, seed 0
    int min_matches = 8;
    int reference_index = 0;
    // stitch
    double gsd_override_mm = 0.0;  // 0 = derive from the fitted plane height
    // analyze
    double defect_depth_threshold_mm = 5.0;
    double defect_min_area_mm2 = 10000.0;
    bool sliding_straightedge = false;
    std::vector<double> stations_m;  // extra profile stations, mosaic-local
    // execution
    int threads = 1;  // worker cap; stages currently run serially

    void validate() const;
};

/// Keypoints surviving description, aligned with their descriptors.
struct FrameFeatures {
    std::vector<features::Keypoint> keypoints;
    std::vector<features::Descriptor> descriptors;
};

/// Registration bookkeeping for one consecutive frame pair.
struct PairSummary {
    int from = 0;
    int to = 0;
    int matches = 0;
    int inliers = 0;
    double score = 0.0;
    int iterations = 0;
};

/// Everything the pipeline produces, in memory.
struct PipelineResult {
    std::vector<registration::Homography> globals;
    std::vector<PairSummary> pairs;
    stitch::RgbMosaic rgb;
    stitch::ElevationMosaic elevation;
    double gsd_mm = 0.0;
    std::vector<analyze::DefectMeasurement> defects;  // mosaic-local coordinates
    std::optional<analyze::RutMeasurement> rut;       // mid-station straightedge
    std::optional<analyze::TransverseProfile> mid_profile;
};

/// Stage functions, exposed so callers can report per-stage failures.
FrameFeatures compute_features(const core::ColorImage& color, const PipelineConfig& cfg);

/// Registers frame `index + 1` onto frame `index`. Throws
/// InsufficientOverlap when fewer than `cfg.min_matches` ratio-test matches
/// survive.
registration::EstimateResult register_pair(const FrameFeatures& from_next,
                                           const FrameFeatures& onto_prev,
                                           const PipelineConfig& cfg, int index,
                                           int* match_count = nullptr);

/// Crop + denoise + plane-fit + level one frame.
struct LeveledFrame {
    planefit::ElevationImage elevation;
    preprocess::CropRect crop;
    double plane_height_mm = 0.0;
};
LeveledFrame level_one(const core::DepthImage& depth, const core::CameraIntrinsics& intr,
                       const PipelineConfig& cfg);

/// Full dataset -> mosaics -> measurements, all in memory. Frames must be
/// pre-registered (depth on the color grid). `on_stage` (optional) is
/// invoked with each stage name as it starts, so drivers can attribute
/// failures.
PipelineResult run_pipeline(const dataio::DatasetManifest& manifest,
                            const std::vector<core::RGBDFrame>& frames,
                            const PipelineConfig& cfg,
                            const std::function<void(const std::string&)>& on_stage = {});

/// Command-line entry point. Exit codes: 0 success, 1 processing error
/// (stage-named message on stderr), 2 usage error.
int run(int argc, const char* const* argv);

}  // namespace pave3d::cli
