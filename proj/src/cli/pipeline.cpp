#include <algorithm>
#include <cmath>

#include "pave3d/cli/cli.hpp"
#include "pave3d/core/geometry.hpp"

namespace pave3d::cli {

void PipelineConfig::validate() const {
    roi.validate();
    smooth.validate();
    if (trim_fraction < 0.0 || trim_fraction >= 0.5)
        throw ValidationError("trim fraction must lie in [0, 0.5)");
    if (surf_threshold < 0.0) throw ValidationError("SURF threshold must be non-negative");
    if (surf_octaves < 1) throw ValidationError("SURF octave count must be >= 1");
    if (!(ratio_threshold > 0.0 && ratio_threshold <= 1.0))
        throw ValidationError("match ratio threshold must lie in (0, 1]");
    msac.validate();
    if (min_matches < 4)
        throw ValidationError("registration needs at least 4 matches per pair");
    if (reference_index < 0) throw ValidationError("reference frame index must be >= 0");
    if (gsd_override_mm < 0.0) throw ValidationError("gsd override must be positive or 0");
    if (!(defect_depth_threshold_mm > 0.0))
        throw ValidationError("defect depth threshold must be positive");
    if (!(defect_min_area_mm2 > 0.0)) throw ValidationError("defect min area must be positive");
    if (threads < 1) throw ValidationError("thread cap must be >= 1");
}

FrameFeatures compute_features(const core::ColorImage& color, const PipelineConfig& cfg) {
    const auto ii = features::integral_image(color);
    const auto kps = features::detect_surf(ii, cfg.surf_threshold, cfg.surf_octaves);
    auto described = features::describe_surf(ii, kps, cfg.surf_upright);
    FrameFeatures out;
    out.descriptors = std::move(described.descriptors);
    out.keypoints.reserve(described.kept_indices.size());
    for (size_t idx : described.kept_indices) out.keypoints.push_back(kps[idx]);
    return out;
}

registration::EstimateResult register_pair(const FrameFeatures& from_next,
                                           const FrameFeatures& onto_prev,
                                           const PipelineConfig& cfg, int index,
                                           int* match_count) {
    const auto matches = features::match_descriptors(from_next.descriptors,
                                                     onto_prev.descriptors,
                                                     cfg.ratio_threshold);
    if (match_count) *match_count = int(matches.size());
    if (int(matches.size()) < cfg.min_matches)
        throw InsufficientOverlap("pair (" + std::to_string(index) + ", " +
                                  std::to_string(index + 1) + "): only " +
                                  std::to_string(matches.size()) +
                                  " ratio-test matches survive (need " +
                                  std::to_string(cfg.min_matches) + ")");
    std::vector<registration::PointPair> pairs;
    pairs.reserve(matches.size());
    for (const auto& m : matches) {
        const auto& q = from_next.keypoints[size_t(m.query_index)];
        const auto& t = onto_prev.keypoints[size_t(m.train_index)];
        pairs.push_back({{q.x, q.y}, {t.x, t.y}});
    }
    return registration::msac_homography(pairs, cfg.msac);
}

LeveledFrame level_one(const core::DepthImage& depth, const core::CameraIntrinsics& intr,
                       const PipelineConfig& cfg) {
    const auto crop = preprocess::compute_crop_rect(depth.width, depth.height, cfg.roi);
    auto cropped = preprocess::crop_roi(depth, cfg.roi);
    cropped = preprocess::gaussian_smooth_depth(cropped, cfg.smooth);

    core::CameraIntrinsics ci = intr;
    ci.cx -= crop.x0;
    ci.cy -= crop.y0;
    ci.width = crop.width;
    ci.height = crop.height;

    const auto cloud = core::depth_to_cloud(cropped, ci);
    const auto plane = planefit::fit_plane_trimmed(cloud, cfg.trim_fraction);
    const auto lvl = planefit::leveling_rotation(plane);

    LeveledFrame out;
    out.elevation = planefit::level_frame(cropped, ci, lvl);
    out.crop = crop;
    out.plane_height_mm = lvl.reference_height;
    return out;
}

PipelineResult run_pipeline(const dataio::DatasetManifest& manifest,
                            const std::vector<core::RGBDFrame>& frames,
                            const PipelineConfig& cfg,
                            const std::function<void(const std::string&)>& on_stage) {
    const auto stage = [&](const char* name) {
        if (on_stage) on_stage(name);
    };
    stage("validate");
    cfg.validate();
    if (frames.empty()) throw EmptyInput("dataset holds no frames");
    if (!manifest.preregistered())
        throw ValidationError("pipeline expects pre-registered frames (depth on the "
                              "color grid); depth-to-color extrinsics are out of scope");
    if (cfg.reference_index >= int(frames.size()))
        throw ValidationError("reference frame index exceeds the frame count");

    // Features + consecutive-pair registration on the color frames.
    stage("features");
    std::vector<FrameFeatures> feats;
    feats.reserve(frames.size());
    for (const auto& f : frames) feats.push_back(compute_features(f.color, cfg));

    stage("registration");
    PipelineResult result;
    stitch::FrameGraph graph;
    graph.frame_count = int(frames.size());
    graph.reference_index = cfg.reference_index;
    graph.pairwise.resize(frames.size() - 1);
    for (size_t i = 0; i + 1 < frames.size(); ++i) {
        int matches = 0;
        auto est = register_pair(feats[i + 1], feats[i], cfg, int(i), &matches);
        PairSummary s;
        s.from = int(i + 1);
        s.to = int(i);
        s.matches = matches;
        s.inliers = int(est.inlier_indices.size());
        s.score = est.score;
        s.iterations = est.iterations_run;
        result.pairs.push_back(s);
        graph.pairwise[i] = std::move(est);
    }
    result.globals = stitch::chain_transforms(graph);

    // Level every depth frame against its own fitted plane.
    stage("leveling");
    std::vector<planefit::ElevationImage> leveled;
    std::vector<preprocess::CropRect> crops;
    double height_sum = 0.0;
    for (const auto& f : frames) {
        auto lf = level_one(f.depth, manifest.depth_intrinsics, cfg);
        height_sum += lf.plane_height_mm;
        leveled.push_back(std::move(lf.elevation));
        crops.push_back(lf.crop);
    }
    const double mean_height = height_sum / double(frames.size());
    const double travel_focal = manifest.travel_axis == dataio::TravelAxis::y
                                    ? manifest.color_intrinsics.fy
                                    : manifest.color_intrinsics.fx;
    result.gsd_mm = cfg.gsd_override_mm > 0.0 ? cfg.gsd_override_mm
                                              : mean_height / travel_focal;

    // Composite.
    stage("stitching");
    std::vector<core::ColorImage> colors;
    colors.reserve(frames.size());
    for (const auto& f : frames) colors.push_back(f.color);
    result.rgb = stitch::mosaic_rgb(colors, result.globals);
    result.elevation = stitch::mosaic_elevation(leveled, crops, result.globals,
                                                result.gsd_mm, manifest.travel_axis);

    // Measurements on the elevation mosaic.
    stage("analysis");
    result.defects = analyze::detect_defects(result.elevation, cfg.defect_depth_threshold_mm,
                                             cfg.defect_min_area_mm2);
    const bool travel_y = manifest.travel_axis == dataio::TravelAxis::y;
    const int long_size = travel_y ? result.elevation.height : result.elevation.width;
    const double mid_station = (long_size / 2) * result.gsd_mm / 1000.0;
    try {
        auto profile = analyze::extract_profile(result.elevation, mid_station);
        result.rut = analyze::rut_depth_straightedge(
            profile, cfg.sliding_straightedge ? analyze::StraightedgeSpan::sliding_2m
                                              : analyze::StraightedgeSpan::full_width);
        result.mid_profile = std::move(profile);
    } catch (const Error&) {
        // Mid-station unreadable (sparse coverage): the mosaic is still valid.
        result.rut.reset();
        result.mid_profile.reset();
    }
    return result;
}

}  // namespace pave3d::cli
