#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pave3d/cli/cli.hpp"
#include "pave3d/dataio/pnm.hpp"
#include "pave3d/dataio/synthetic.hpp"

namespace pave3d::cli {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Input digests (FNV-1a 64), embedded in reports for reproducibility.
// ---------------------------------------------------------------------------

std::uint64_t fnv1a64(const char* data, size_t n, std::uint64_t h) {
    for (size_t i = 0; i < n; ++i) {
        h ^= std::uint64_t(static_cast<unsigned char>(data[i]));
        h *= 1099511628211ull;
    }
    return h;
}

constexpr std::uint64_t kFnvBasis = 14695981039346656037ull;

std::uint64_t digest_file_into(const fs::path& path, std::uint64_t h) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFile("cannot read '" + path.string() + "'");
    char buf[65536];
    while (in.read(buf, sizeof buf) || in.gcount() > 0)
        h = fnv1a64(buf, size_t(in.gcount()), h);
    return h;
}

std::string hex64(std::uint64_t h) {
    char out[32];
    std::snprintf(out, sizeof out, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
    return out;
}

std::string digest_file(const fs::path& path) {
    return hex64(digest_file_into(path, kFnvBasis));
}

std::string digest_dataset(const fs::path& root, const dataio::DatasetManifest& manifest) {
    std::uint64_t h = digest_file_into(root / "manifest.json", kFnvBasis);
    for (const auto& e : manifest.frames) {
        h = digest_file_into(root / e.color_path, h);
        h = digest_file_into(root / e.depth_path, h);
    }
    return hex64(h);
}

// ---------------------------------------------------------------------------
// Config plumbing: one flag set and one JSON block, shared by every command.
// ---------------------------------------------------------------------------

const char* straightedge_name(bool sliding) { return sliding ? "2m-sliding" : "full-width"; }

const char* family_name(registration::TransformFamily f) {
    return f == registration::TransformFamily::projective ? "projective" : "similarity";
}

ordered_json config_json(const PipelineConfig& cfg) {
    ordered_json j;
    j["roi_fraction_x"] = cfg.roi.fraction_x;
    j["roi_fraction_y"] = cfg.roi.fraction_y;
    j["smooth_sigma_px"] = cfg.smooth.sigma;
    j["smooth_radius_px"] = cfg.smooth.radius;
    j["trim_fraction"] = cfg.trim_fraction;
    j["surf_threshold"] = cfg.surf_threshold;
    j["surf_octaves"] = cfg.surf_octaves;
    j["surf_upright"] = cfg.surf_upright;
    j["ratio_threshold"] = cfg.ratio_threshold;
    j["msac_threshold_px"] = cfg.msac.threshold;
    j["msac_max_iterations"] = cfg.msac.max_iterations;
    j["msac_confidence"] = cfg.msac.confidence;
    j["msac_seed"] = cfg.msac.seed;
    j["msac_symmetric_residual"] = cfg.msac.symmetric_residual;
    j["transform_family"] = family_name(cfg.msac.family);
    j["min_matches"] = cfg.min_matches;
    j["reference_index"] = cfg.reference_index;
    j["gsd_override_mm"] = cfg.gsd_override_mm;
    j["defect_depth_threshold_mm"] = cfg.defect_depth_threshold_mm;
    j["defect_min_area_mm2"] = cfg.defect_min_area_mm2;
    j["straightedge"] = straightedge_name(cfg.sliding_straightedge);
    j["stations_m"] = cfg.stations_m;
    j["threads"] = cfg.threads;
    return j;
}

void add_analysis_flags(CLI::App* cmd, PipelineConfig& cfg) {
    cmd->add_option("--defect-threshold", cfg.defect_depth_threshold_mm,
                    "Defect segmentation depth threshold, mm")
        ->capture_default_str();
    cmd->add_option("--min-area", cfg.defect_min_area_mm2, "Minimum defect area, mm^2")
        ->capture_default_str();
    cmd->add_flag("--sliding", cfg.sliding_straightedge,
                  "Use the 2 m sliding straightedge instead of full width");
    cmd->add_option("--station", cfg.stations_m,
                    "Extra transverse-profile stations, meters (repeatable)");
}

void add_pipeline_flags(CLI::App* cmd, PipelineConfig& cfg) {
    cmd->add_option("--roi-x", cfg.roi.fraction_x, "Centered crop fraction, transverse")
        ->capture_default_str();
    cmd->add_option("--roi-y", cfg.roi.fraction_y, "Centered crop fraction, longitudinal")
        ->capture_default_str();
    cmd->add_option("--smooth-sigma", cfg.smooth.sigma, "Depth smoothing sigma, px")
        ->capture_default_str();
    cmd->add_option("--smooth-radius", cfg.smooth.radius, "Depth smoothing radius, px")
        ->capture_default_str();
    cmd->add_option("--trim", cfg.trim_fraction, "Plane-fit trim fraction")
        ->capture_default_str();
    cmd->add_option("--surf-threshold", cfg.surf_threshold, "Fast-Hessian response threshold")
        ->capture_default_str();
    cmd->add_option("--surf-octaves", cfg.surf_octaves, "Detector octave count")
        ->capture_default_str();
    cmd->add_flag(
        "--oriented", [&cfg](std::int64_t) { cfg.surf_upright = false; },
        "Estimate descriptor orientations (default: upright)");
    cmd->add_option("--ratio", cfg.ratio_threshold, "Match ratio-test threshold")
        ->capture_default_str();
    cmd->add_option("--msac-threshold", cfg.msac.threshold, "MSAC inlier threshold, px")
        ->capture_default_str();
    cmd->add_option("--msac-iterations", cfg.msac.max_iterations, "MSAC iteration cap")
        ->capture_default_str();
    cmd->add_option("--msac-confidence", cfg.msac.confidence, "MSAC stopping confidence")
        ->capture_default_str();
    cmd->add_option("--msac-seed", cfg.msac.seed, "MSAC sampler seed")->capture_default_str();
    cmd->add_flag("--msac-symmetric", cfg.msac.symmetric_residual,
                  "Score with symmetric transfer error");
    const std::map<std::string, registration::TransformFamily> families{
        {"projective", registration::TransformFamily::projective},
        {"similarity", registration::TransformFamily::similarity}};
    cmd->add_option("--family", cfg.msac.family, "Transform family fitted per pair")
        ->transform(CLI::CheckedTransformer(families, CLI::ignore_case))
        ->default_str("projective");
    cmd->add_option("--min-matches", cfg.min_matches, "Matches required per frame pair")
        ->capture_default_str();
    cmd->add_option("--reference", cfg.reference_index, "Reference frame index")
        ->capture_default_str();
    cmd->add_option("--gsd", cfg.gsd_override_mm,
                    "Mosaic ground sample distance override, mm/px (0 = derive)")
        ->capture_default_str();
    cmd->add_option("--threads", cfg.threads, "Worker cap (stages currently run serially)")
        ->capture_default_str();
    add_analysis_flags(cmd, cfg);
}

// ---------------------------------------------------------------------------
// Report fragments.
// ---------------------------------------------------------------------------

ordered_json inputs_json(const std::vector<std::pair<std::string, std::string>>& inputs) {
    ordered_json arr = ordered_json::array();
    for (const auto& [path, digest] : inputs) {
        ordered_json one;
        one["path"] = path;
        one["digest"] = digest;
        arr.push_back(one);
    }
    return arr;
}

ordered_json mosaic_json(const stitch::ElevationMosaic& m) {
    ordered_json j;
    j["width"] = m.width;
    j["height"] = m.height;
    j["gsd_mm"] = m.gsd_mm;
    j["origin_x"] = m.origin_x;
    j["origin_y"] = m.origin_y;
    j["travel_axis"] = dataio::to_string(m.travel_axis);
    j["data_pixels"] = m.data_count();
    return j;
}

ordered_json defect_json(const analyze::DefectMeasurement& d) {
    ordered_json j;
    j["kind"] = dataio::to_string(d.kind);
    j["depth_mm"] = d.depth_mm;
    j["width_mm"] = d.width_mm;
    j["length_mm"] = d.length_mm;
    j["station_m"] = d.station_m;
    j["offset_m"] = d.offset_m;
    j["area_mm2"] = d.area_mm2;
    return j;
}

ordered_json rut_json(const std::optional<analyze::RutMeasurement>& rut, double station_m) {
    if (!rut) return nullptr;
    ordered_json j;
    j["depth_mm"] = rut->depth_mm;
    j["offset_at_max_m"] = rut->offset_at_max_m;
    j["station_m"] = station_m;
    j["span"] = straightedge_name(rut->span == analyze::StraightedgeSpan::sliding_2m);
    return j;
}

void write_json(const ordered_json& doc, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoFailure("cannot open '" + path.string() + "' for writing");
    out << doc.dump(2) << "\n";
    if (!out) throw IoFailure("failed while writing '" + path.string() + "'");
}

ordered_json load_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingFile("cannot read '" + path.string() + "'");
    try {
        return ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

/// Shift mosaic-local centroids into the lane-anchored coordinates ground
/// truth uses: longitudinal 0 under the reference frame's principal point,
/// transverse 0 at the lane center.
std::pair<double, double> world_shift(const stitch::ElevationMosaic& m,
                                      const core::CameraIntrinsics& color_intr) {
    const bool travel_y = m.travel_axis == dataio::TravelAxis::y;
    const double origin_long = travel_y ? m.origin_y : m.origin_x;
    const double origin_cross = travel_y ? m.origin_x : m.origin_y;
    const double c_long = travel_y ? color_intr.cy : color_intr.cx;
    const double c_cross = travel_y ? color_intr.cx : color_intr.cy;
    return {(origin_long - c_long) * m.gsd_mm / 1000.0,
            (origin_cross - c_cross) * m.gsd_mm / 1000.0};
}

std::vector<analyze::DefectMeasurement> to_world(
    const std::vector<analyze::DefectMeasurement>& defects,
    const std::pair<double, double>& shift) {
    auto world = defects;
    for (auto& d : world) {
        d.station_m += shift.first;
        d.offset_m += shift.second;
    }
    return world;
}

/// MRE + regression of measured-on-truth over the matched defect
/// dimensions. Either block may be null when matching or the fit degenerates.
void append_accuracy(ordered_json& report,
                     const std::vector<analyze::DefectMeasurement>& world_defects,
                     const std::vector<dataio::GroundTruthDefect>& truth) {
    try {
        const auto mre = analyze::defect_mre(world_defects, truth);
        ordered_json j;
        j["depth_pct"] = mre.mre_depth_pct;
        j["width_pct"] = mre.mre_width_pct;
        j["length_pct"] = mre.mre_length_pct;
        j["matched_pairs"] = mre.matched_pairs;
        j["missed_truths"] = mre.missed_truths;
        j["false_positives"] = mre.false_positives;
        report["mre"] = j;
    } catch (const NoMatchedPairs&) {
        report["mre"] = nullptr;
    }

    std::vector<std::pair<double, double>> fit_pairs;
    for (const auto& [mi, ti] : analyze::match_defects(world_defects, truth)) {
        const auto& m = world_defects[size_t(mi)];
        const auto& t = truth[size_t(ti)];
        fit_pairs.emplace_back(m.depth_mm, t.depth_mm);
        fit_pairs.emplace_back(m.width_mm, t.width_mm);
        fit_pairs.emplace_back(m.length_mm, t.length_mm);
    }
    report["r2"] = nullptr;
    report["slope"] = nullptr;
    report["intercept"] = nullptr;
    if (fit_pairs.size() >= 3) {
        try {
            const auto fit = analyze::linear_fit_r2(fit_pairs);
            report["r2"] = fit.r2;
            report["slope"] = fit.slope;
            report["intercept"] = fit.intercept_mm;
        } catch (const DegenerateVariance&) {
        }
    }
}

// ---------------------------------------------------------------------------
// Profile export shared by `profile` and `pipeline`.
// ---------------------------------------------------------------------------

ordered_json export_profiles(const stitch::ElevationMosaic& mosaic,
                             const std::vector<double>& stations, bool sliding, bool svg,
                             const fs::path& out_dir) {
    ordered_json arr = ordered_json::array();
    for (size_t i = 0; i < stations.size(); ++i) {
        char stem[32];
        std::snprintf(stem, sizeof stem, "profile_%02zu", i + 1);
        ordered_json one;
        one["station_m"] = stations[i];
        try {
            const auto profile = analyze::extract_profile(mosaic, stations[i]);
            const auto rut = analyze::rut_depth_straightedge(
                profile, sliding ? analyze::StraightedgeSpan::sliding_2m
                                 : analyze::StraightedgeSpan::full_width);
            const auto csv = out_dir / (std::string(stem) + ".csv");
            analyze::export_profile_csv(profile, csv.string());
            one["snapped_station_m"] = profile.station_m;
            one["samples"] = profile.samples.size();
            one["gap_warning"] = profile.gap_warning;
            one["csv"] = csv.filename().string();
            one["rut"] = rut_json(rut, profile.station_m);
            if (svg) {
                const auto svg_path = out_dir / (std::string(stem) + ".svg");
                analyze::export_profile_svg(profile, svg_path.string());
                one["svg"] = svg_path.filename().string();
            }
        } catch (const Error& e) {
            one["error"] = e.what();
        }
        arr.push_back(one);
    }
    return arr;
}

// ---------------------------------------------------------------------------
// Subcommand payloads.
// ---------------------------------------------------------------------------

struct SynthOptions {
    std::string out;
    dataio::SynthSpec spec;
    std::vector<std::string> defect_specs;
};

bool parse_defect_spec(const std::string& text, dataio::GroundTruthDefect& out) {
    std::istringstream ss(text);
    std::string kind;
    if (!std::getline(ss, kind, ',')) return false;
    try {
        out.kind = dataio::defect_kind_from_string(kind);
    } catch (const Error&) {
        return false;
    }
    char c1 = 0, c2 = 0, c3 = 0, c4 = 0;
    if (!(ss >> out.depth_mm >> c1 >> out.width_mm >> c2 >> out.length_mm >> c3 >>
          out.station_m >> c4 >> out.offset_m))
        return false;
    if (c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',') return false;
    return out.depth_mm > 0.0 && out.width_mm > 0.0 && out.length_mm > 0.0;
}

int cmd_synth(const SynthOptions& opts) {
    dataio::SynthSpec spec = opts.spec;
    for (const auto& text : opts.defect_specs) {
        dataio::GroundTruthDefect d;
        if (!parse_defect_spec(text, d)) {
            std::cerr << "pave3d synth: bad --defect spec '" << text
                      << "' (expected kind,depth_mm,width_mm,length_mm,station_m,offset_m)\n";
            return 2;
        }
        spec.defects.push_back(d);
    }
    auto [manifest, frames] = dataio::generate_synthetic(spec);
    fs::create_directories(opts.out);
    dataio::write_dataset(manifest, frames, opts.out);
    std::cerr << "pave3d synth: wrote " << frames.size() << " frames to " << opts.out << "\n";
    return 0;
}

struct RunOptions {
    std::string in;
    std::string out;
    bool svg = false;
    PipelineConfig cfg;
};

int run_dataset_pipeline(const char* command, const RunOptions& opts, bool full) {
    std::string stage = "load";
    try {
        const auto [manifest, frames] = dataio::read_dataset(opts.in);
        const std::string digest = digest_dataset(opts.in, manifest);
        fs::create_directories(opts.out);

        auto result = run_pipeline(manifest, frames, opts.cfg,
                                   [&stage](const std::string& s) { stage = s; });

        stage = "export";
        const fs::path out_dir(opts.out);
        dataio::write_ppm(result.rgb.image, out_dir / "mosaic.ppm");
        stitch::write_elevation_grid(result.elevation, (out_dir / "mosaic.elev").string());
        stitch::export_ply(result.elevation, (out_dir / "mosaic.ply").string());

        ordered_json report;
        report["command"] = command;
        report["config"] = config_json(opts.cfg);
        report["inputs"] = inputs_json({{opts.in, digest}});
        report["frames"] = frames.size();
        ordered_json pairs = ordered_json::array();
        for (const auto& p : result.pairs) {
            ordered_json one;
            one["from"] = p.from;
            one["to"] = p.to;
            one["matches"] = p.matches;
            one["inliers"] = p.inliers;
            one["score"] = p.score;
            one["iterations"] = p.iterations;
            pairs.push_back(one);
        }
        report["pairs"] = pairs;
        report["gsd_mm"] = result.gsd_mm;
        report["mosaic"] = mosaic_json(result.elevation);
        report["color_mosaic"] = {{"width", result.rgb.image.width},
                                  {"height", result.rgb.image.height},
                                  {"origin_x", result.rgb.origin_x},
                                  {"origin_y", result.rgb.origin_y}};

        if (full) {
            const auto shift = world_shift(result.elevation, manifest.color_intrinsics);
            ordered_json defects = ordered_json::array();
            for (const auto& d : result.defects) {
                auto j = defect_json(d);
                j["world_station_m"] = d.station_m + shift.first;
                j["world_offset_m"] = d.offset_m + shift.second;
                defects.push_back(j);
            }
            report["defects"] = defects;
            auto rut_j = rut_json(result.rut, result.mid_profile
                                                  ? result.mid_profile->station_m
                                                  : 0.0);
            if (!rut_j.is_null()) {
                rut_j["world_station_m"] = rut_j["station_m"].get<double>() + shift.first;
                rut_j["world_offset_at_max_m"] =
                    rut_j["offset_at_max_m"].get<double>() + shift.second;
            }
            report["rut"] = rut_j;
            if (!opts.cfg.stations_m.empty())
                report["profiles"] = export_profiles(result.elevation, opts.cfg.stations_m,
                                                     opts.cfg.sliding_straightedge, opts.svg,
                                                     out_dir);
            if (!manifest.ground_truth.empty())
                append_accuracy(report, to_world(result.defects, shift),
                                manifest.ground_truth);
        }
        write_json(report, out_dir / (full ? "pipeline_report.json" : "stitch_report.json"));
        std::cerr << "pave3d " << command << ": mosaic " << result.elevation.width << "x"
                  << result.elevation.height << " px at " << result.gsd_mm
                  << " mm/px written to " << opts.out << "\n";
        return 0;
    } catch (const Error& e) {
        std::cerr << "pave3d " << command << " [" << stage << "]: " << e.what() << "\n";
        return 1;
    }
}

struct MosaicOptions {
    std::string mosaic;
    std::string out;
    bool svg = false;
    PipelineConfig cfg;
};

int cmd_profile(const MosaicOptions& opts) {
    std::string stage = "validate";
    try {
        opts.cfg.validate();
        stage = "load";
        const auto mosaic = stitch::read_elevation_grid(opts.mosaic);
        const std::string digest = digest_file(opts.mosaic);
        fs::create_directories(opts.out);
        stage = "analysis";
        if (opts.cfg.stations_m.empty())
            throw ValidationError("profile needs at least one --station");
        const auto profiles =
            export_profiles(mosaic, opts.cfg.stations_m, opts.cfg.sliding_straightedge,
                            opts.svg, opts.out);
        stage = "export";
        ordered_json report;
        report["command"] = "profile";
        report["config"] = config_json(opts.cfg);
        report["inputs"] = inputs_json({{opts.mosaic, digest}});
        report["mosaic"] = mosaic_json(mosaic);
        report["profiles"] = profiles;
        write_json(report, fs::path(opts.out) / "profile_report.json");
        return 0;
    } catch (const Error& e) {
        std::cerr << "pave3d profile [" << stage << "]: " << e.what() << "\n";
        return 1;
    }
}

int cmd_measure(const MosaicOptions& opts) {
    std::string stage = "validate";
    try {
        opts.cfg.validate();
        stage = "load";
        const auto mosaic = stitch::read_elevation_grid(opts.mosaic);
        const std::string digest = digest_file(opts.mosaic);
        stage = "analysis";
        const auto defects = analyze::detect_defects(mosaic, opts.cfg.defect_depth_threshold_mm,
                                                     opts.cfg.defect_min_area_mm2);
        const bool travel_y = mosaic.travel_axis == dataio::TravelAxis::y;
        const int long_size = travel_y ? mosaic.height : mosaic.width;
        const double mid_station = (long_size / 2) * mosaic.gsd_mm / 1000.0;
        std::optional<analyze::RutMeasurement> rut;
        double rut_station = 0.0;
        try {
            const auto profile = analyze::extract_profile(mosaic, mid_station);
            rut = analyze::rut_depth_straightedge(
                profile, opts.cfg.sliding_straightedge
                             ? analyze::StraightedgeSpan::sliding_2m
                             : analyze::StraightedgeSpan::full_width);
            rut_station = profile.station_m;
        } catch (const Error&) {
        }

        stage = "export";
        ordered_json report;
        report["command"] = "measure";
        report["config"] = config_json(opts.cfg);
        report["inputs"] = inputs_json({{opts.mosaic, digest}});
        report["mosaic"] = mosaic_json(mosaic);
        ordered_json arr = ordered_json::array();
        for (const auto& d : defects) arr.push_back(defect_json(d));
        report["defects"] = arr;
        report["rut"] = rut_json(rut, rut_station);
        write_json(report, opts.out);
        std::cerr << "pave3d measure: " << defects.size() << " defects -> " << opts.out
                  << "\n";
        return 0;
    } catch (const Error& e) {
        std::cerr << "pave3d measure [" << stage << "]: " << e.what() << "\n";
        return 1;
    }
}

struct EvalOptions {
    std::string report;
    std::string dataset;
    std::string out;
};

int cmd_eval(const EvalOptions& opts) {
    std::string stage = "load";
    try {
        const auto measure_doc = load_json(opts.report);
        const auto [manifest, frames] = dataio::read_dataset(opts.dataset);
        (void)frames;
        if (manifest.ground_truth.empty())
            throw ValidationError("dataset manifest carries no ground-truth defects");
        if (!measure_doc.contains("defects") || !measure_doc.contains("mosaic"))
            throw ValidationError("report lacks defects[]/mosaic blocks; run `measure` or "
                                  "`pipeline` first");

        stage = "analysis";
        const auto& mj = measure_doc["mosaic"];
        stitch::ElevationMosaic shell;
        shell.gsd_mm = mj.at("gsd_mm").get<double>();
        shell.origin_x = mj.at("origin_x").get<int>();
        shell.origin_y = mj.at("origin_y").get<int>();
        shell.travel_axis = dataio::travel_axis_from_string(mj.at("travel_axis").get<std::string>());
        const auto shift = world_shift(shell, manifest.color_intrinsics);

        std::vector<analyze::DefectMeasurement> world;
        for (const auto& dj : measure_doc["defects"]) {
            analyze::DefectMeasurement d;
            d.kind = dataio::defect_kind_from_string(dj.at("kind").get<std::string>());
            d.depth_mm = dj.at("depth_mm").get<double>();
            d.width_mm = dj.at("width_mm").get<double>();
            d.length_mm = dj.at("length_mm").get<double>();
            d.station_m = dj.at("station_m").get<double>() + shift.first;
            d.offset_m = dj.at("offset_m").get<double>() + shift.second;
            d.area_mm2 = dj.at("area_mm2").get<double>();
            world.push_back(d);
        }

        stage = "export";
        ordered_json report;
        report["command"] = "eval";
        report["inputs"] = inputs_json(
            {{opts.report, digest_file(opts.report)},
             {opts.dataset, digest_dataset(opts.dataset, manifest)}});
        report["truth_defects"] = manifest.ground_truth.size();
        report["measured_defects"] = world.size();
        append_accuracy(report, world, manifest.ground_truth);
        write_json(report, opts.out);
        return 0;
    } catch (const Error& e) {
        std::cerr << "pave3d eval [" << stage << "]: " << e.what() << "\n";
        return 1;
    }
}

struct InfoOptions {
    std::string dataset;
    std::string mosaic;
};

int cmd_info(const InfoOptions& opts) {
    try {
        if (!opts.dataset.empty()) {
            const auto [manifest, frames] = dataio::read_dataset(opts.dataset);
            std::cout << "dataset: " << opts.dataset << "\n"
                      << "frames: " << frames.size() << "\n"
                      << "resolution: " << manifest.color_intrinsics.width << "x"
                      << manifest.color_intrinsics.height << "\n"
                      << "travel_axis: " << dataio::to_string(manifest.travel_axis) << "\n"
                      << "preregistered: " << (manifest.preregistered() ? "yes" : "no") << "\n"
                      << "ground_truth_defects: " << manifest.ground_truth.size() << "\n";
            for (const auto& d : manifest.ground_truth)
                std::cout << "  " << dataio::to_string(d.kind) << " depth " << d.depth_mm
                          << " mm, " << d.width_mm << "x" << d.length_mm << " mm at station "
                          << d.station_m << " m, offset " << d.offset_m << " m\n";
        }
        if (!opts.mosaic.empty()) {
            const auto mosaic = stitch::read_elevation_grid(opts.mosaic);
            std::cout << "mosaic: " << opts.mosaic << "\n"
                      << "size: " << mosaic.width << "x" << mosaic.height << " px\n"
                      << "gsd_mm: " << mosaic.gsd_mm << "\n"
                      << "origin: (" << mosaic.origin_x << ", " << mosaic.origin_y << ")\n"
                      << "travel_axis: " << dataio::to_string(mosaic.travel_axis) << "\n"
                      << "data_pixels: " << mosaic.data_count() << " of "
                      << size_t(mosaic.width) * size_t(mosaic.height) << "\n";
        }
        return 0;
    } catch (const Error& e) {
        std::cerr << "pave3d info [load]: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"pave3d: offline RGB-D pavement reconstruction and metrology"};
    app.require_subcommand(1);

    SynthOptions synth;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic RGB-D dataset");
    synth_cmd->add_option("--out", synth.out, "Output dataset directory")->required();
    synth_cmd->add_option("--seed", synth.spec.seed, "Noise seed")->capture_default_str();
    synth_cmd->add_option("--texture-seed", synth.spec.texture_seed, "Albedo texture seed")
        ->capture_default_str();
    synth_cmd->add_option("--frames", synth.spec.frame_count, "Frame count")
        ->capture_default_str();
    synth_cmd->add_option("--overlap", synth.spec.overlap_fraction,
                          "Consecutive-frame overlap fraction")
        ->capture_default_str();
    synth_cmd->add_option("--noise-sigma0", synth.spec.noise_sigma0_mm,
                          "Axial noise floor sigma0, mm")
        ->capture_default_str();
    synth_cmd->add_option("--noise-k", synth.spec.noise_k_per_mm,
                          "Axial noise growth k, 1/mm")
        ->capture_default_str();
    synth_cmd->add_option("--camera-height", synth.spec.camera_height_mm, "Camera height, mm")
        ->capture_default_str();
    synth_cmd->add_option("--lane-width", synth.spec.lane_width_m, "Lane width, m")
        ->capture_default_str();
    synth_cmd->add_option("--slope-x", synth.spec.slope_x, "Transverse grade")
        ->capture_default_str();
    synth_cmd->add_option("--slope-y", synth.spec.slope_y, "Longitudinal grade")
        ->capture_default_str();
    synth_cmd->add_option("--width", synth.spec.image_width, "Frame width, px")
        ->capture_default_str();
    synth_cmd->add_option("--height", synth.spec.image_height, "Frame height, px")
        ->capture_default_str();
    const std::map<std::string, dataio::TravelAxis> axes{{"x", dataio::TravelAxis::x},
                                                         {"y", dataio::TravelAxis::y}};
    synth_cmd->add_option("--travel-axis", synth.spec.travel_axis, "Camera travel axis")
        ->transform(CLI::CheckedTransformer(axes, CLI::ignore_case))
        ->default_str("y");
    synth_cmd->add_option("--defect", synth.defect_specs,
                          "Defect spec kind,depth_mm,width_mm,length_mm,station_m,offset_m "
                          "(repeatable)");

    RunOptions stitch_opts;
    auto* stitch_cmd =
        app.add_subcommand("stitch", "Register, level, and composite a dataset into mosaics");
    stitch_cmd->add_option("--in", stitch_opts.in, "Dataset directory")->required();
    stitch_cmd->add_option("--out", stitch_opts.out, "Output directory")->required();
    add_pipeline_flags(stitch_cmd, stitch_opts.cfg);

    MosaicOptions profile_opts;
    auto* profile_cmd =
        app.add_subcommand("profile", "Extract transverse profiles from an elevation mosaic");
    profile_cmd->add_option("--mosaic", profile_opts.mosaic, "Elevation grid (.elev)")
        ->required();
    profile_cmd->add_option("--out", profile_opts.out, "Output directory")->required();
    profile_cmd->add_flag("--svg", profile_opts.svg, "Also write SVG plots");
    add_analysis_flags(profile_cmd, profile_opts.cfg);

    MosaicOptions measure_opts;
    auto* measure_cmd =
        app.add_subcommand("measure", "Detect and measure defects in an elevation mosaic");
    measure_cmd->add_option("--mosaic", measure_opts.mosaic, "Elevation grid (.elev)")
        ->required();
    measure_cmd->add_option("--out", measure_opts.out, "Report path (.json)")->required();
    add_analysis_flags(measure_cmd, measure_opts.cfg);

    EvalOptions eval_opts;
    auto* eval_cmd =
        app.add_subcommand("eval", "Score a measurement report against dataset ground truth");
    eval_cmd->add_option("--report", eval_opts.report, "Report from measure/pipeline")
        ->required();
    eval_cmd->add_option("--dataset", eval_opts.dataset, "Dataset with ground truth")
        ->required();
    eval_cmd->add_option("--out", eval_opts.out, "Evaluation report path (.json)")->required();

    RunOptions pipeline_opts;
    auto* pipeline_cmd =
        app.add_subcommand("pipeline", "Full dataset -> mosaics -> measurements -> report");
    pipeline_cmd->add_option("--in", pipeline_opts.in, "Dataset directory")->required();
    pipeline_cmd->add_option("--out", pipeline_opts.out, "Output directory")->required();
    pipeline_cmd->add_flag("--svg", pipeline_opts.svg, "Also write SVG profile plots");
    add_pipeline_flags(pipeline_cmd, pipeline_opts.cfg);

    InfoOptions info_opts;
    auto* info_cmd = app.add_subcommand("info", "Summarize a dataset or mosaic");
    info_cmd->add_option("--in", info_opts.dataset, "Dataset directory");
    info_cmd->add_option("--mosaic", info_opts.mosaic, "Elevation grid (.elev)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*synth_cmd) return cmd_synth(synth);
        if (*stitch_cmd) return run_dataset_pipeline("stitch", stitch_opts, false);
        if (*profile_cmd) return cmd_profile(profile_opts);
        if (*measure_cmd) return cmd_measure(measure_opts);
        if (*eval_cmd) return cmd_eval(eval_opts);
        if (*pipeline_cmd) return run_dataset_pipeline("pipeline", pipeline_opts, true);
        if (*info_cmd) {
            if (info_opts.dataset.empty() && info_opts.mosaic.empty()) {
                std::cerr << "pave3d info: pass --in and/or --mosaic\n";
                return 2;
            }
            return cmd_info(info_opts);
        }
    } catch (const Error& e) {
        std::cerr << "pave3d: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "pave3d: unexpected error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace pave3d::cli
