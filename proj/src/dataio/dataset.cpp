#include "pave3d/dataio/dataset.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "pave3d/dataio/pnm.hpp"

namespace pave3d::dataio {

using ordered_json = nlohmann::ordered_json;

std::string to_string(TravelAxis axis) { return axis == TravelAxis::x ? "x" : "y"; }

TravelAxis travel_axis_from_string(const std::string& s) {
    if (s == "x") return TravelAxis::x;
    if (s == "y") return TravelAxis::y;
    throw ValidationError("travel_axis must be \"x\" or \"y\", got \"" + s + "\"");
}

std::string to_string(DefectKind kind) { return kind == DefectKind::rut ? "rut" : "pothole"; }

DefectKind defect_kind_from_string(const std::string& s) {
    if (s == "rut") return DefectKind::rut;
    if (s == "pothole") return DefectKind::pothole;
    throw ValidationError("defect kind must be \"rut\" or \"pothole\", got \"" + s + "\"");
}

namespace {

ordered_json intrinsics_to_json(const core::CameraIntrinsics& intr) {
    return ordered_json{{"fx", intr.fx},       {"fy", intr.fy},     {"cx", intr.cx},
                        {"cy", intr.cy},       {"width", intr.width}, {"height", intr.height}};
}

core::CameraIntrinsics intrinsics_from_json(const ordered_json& j) {
    core::CameraIntrinsics intr;
    intr.fx = j.at("fx").get<double>();
    intr.fy = j.at("fy").get<double>();
    intr.cx = j.at("cx").get<double>();
    intr.cy = j.at("cy").get<double>();
    intr.width = j.at("width").get<int>();
    intr.height = j.at("height").get<int>();
    intr.validate();
    return intr;
}

ordered_json extrinsic_to_json(const core::RigidTransform& t) {
    ordered_json rot = ordered_json::array();
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) rot.push_back(t.rotation(r, c));
    ordered_json tr = ordered_json::array();
    for (int i = 0; i < 3; ++i) tr.push_back(t.translation(i));
    return ordered_json{{"rotation", rot}, {"translation_mm", tr}};
}

core::RigidTransform extrinsic_from_json(const ordered_json& j) {
    core::RigidTransform t;
    const auto& rot = j.at("rotation");
    if (rot.size() != 9) throw ValidationError("extrinsic rotation must have 9 entries");
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) t.rotation(r, c) = rot.at(size_t(r) * 3 + c).get<double>();
    const auto& tr = j.at("translation_mm");
    if (tr.size() != 3) throw ValidationError("extrinsic translation must have 3 entries");
    for (int i = 0; i < 3; ++i) t.translation(i) = tr.at(size_t(i)).get<double>();
    t.validate();
    return t;
}

ordered_json defect_to_json(const GroundTruthDefect& d) {
    return ordered_json{{"kind", to_string(d.kind)},     {"depth_mm", d.depth_mm},
                        {"width_mm", d.width_mm},        {"length_mm", d.length_mm},
                        {"center_station_m", d.station_m}, {"center_offset_m", d.offset_m}};
}

GroundTruthDefect defect_from_json(const ordered_json& j) {
    GroundTruthDefect d;
    d.kind = defect_kind_from_string(j.at("kind").get<std::string>());
    d.depth_mm = j.at("depth_mm").get<double>();
    d.width_mm = j.at("width_mm").get<double>();
    d.length_mm = j.at("length_mm").get<double>();
    d.station_m = j.at("center_station_m").get<double>();
    d.offset_m = j.at("center_offset_m").get<double>();
    d.validate();
    return d;
}

void validate_dataset(const DatasetManifest& manifest, const std::vector<core::RGBDFrame>& frames) {
    manifest.depth_intrinsics.validate();
    manifest.color_intrinsics.validate();
    if (manifest.extrinsic) manifest.extrinsic->validate();
    if (manifest.frames.size() != frames.size())
        throw ValidationError("manifest frame count differs from frame list");
    for (size_t i = 0; i < frames.size(); ++i) {
        if (manifest.frames[i].index != frames[i].index)
            throw ValidationError("manifest frame index differs from frame data");
        if (i > 0 && manifest.frames[i].index <= manifest.frames[i - 1].index)
            throw ValidationError("frame indices must be strictly increasing");
        const auto& f = frames[i];
        if (f.color.width != manifest.color_intrinsics.width ||
            f.color.height != manifest.color_intrinsics.height)
            throw ValidationError("frame " + std::to_string(f.index) +
                                  ": color resolution differs from manifest intrinsics");
        if (f.depth.width != manifest.depth_intrinsics.width ||
            f.depth.height != manifest.depth_intrinsics.height)
            throw ValidationError("frame " + std::to_string(f.index) +
                                  ": depth resolution differs from manifest intrinsics");
    }
    for (const auto& d : manifest.ground_truth) d.validate();
}

}  // namespace

void write_dataset(const DatasetManifest& manifest, const std::vector<core::RGBDFrame>& frames,
                   const std::filesystem::path& root) {
    validate_dataset(manifest, frames);

    std::error_code ec;
    std::filesystem::create_directories(root, ec);
    if (ec) throw IoFailure("cannot create dataset directory " + root.string());

    ordered_json j;
    j["version"] = manifest.version;
    j["frames"] = ordered_json::array();
    for (const auto& fe : manifest.frames)
        j["frames"].push_back(ordered_json{
            {"index", fe.index}, {"color", fe.color_path}, {"depth", fe.depth_path}});
    j["depth_intrinsics"] = intrinsics_to_json(manifest.depth_intrinsics);
    j["color_intrinsics"] = intrinsics_to_json(manifest.color_intrinsics);
    if (manifest.extrinsic)
        j["extrinsic"] = extrinsic_to_json(*manifest.extrinsic);
    else
        j["preregistered"] = true;
    j["travel_axis"] = to_string(manifest.travel_axis);
    j["ground_truth"] = ordered_json::array();
    for (const auto& d : manifest.ground_truth) j["ground_truth"].push_back(defect_to_json(d));

    {
        std::ofstream out(root / "manifest.json", std::ios::binary | std::ios::trunc);
        if (!out) throw IoFailure("cannot write manifest in " + root.string());
        out << j.dump(2) << "\n";
    }
    for (size_t i = 0; i < frames.size(); ++i) {
        write_ppm(frames[i].color, root / manifest.frames[i].color_path);
        write_pgm16(frames[i].depth, root / manifest.frames[i].depth_path);
    }
}

std::pair<DatasetManifest, std::vector<core::RGBDFrame>> read_dataset(const std::filesystem::path& root) {
    const auto manifest_path = root / "manifest.json";
    if (!std::filesystem::exists(manifest_path))
        throw MissingManifest("no manifest.json under " + root.string());

    ordered_json j;
    {
        std::ifstream in(manifest_path, std::ios::binary);
        if (!in) throw IoFailure("cannot open " + manifest_path.string());
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("malformed manifest " + manifest_path.string() + ": " + e.what());
        }
    }

    DatasetManifest manifest;
    try {
        manifest.version = j.at("version").get<int>();
        for (const auto& fe : j.at("frames")) {
            FrameEntry e;
            e.index = fe.at("index").get<int>();
            e.color_path = fe.at("color").get<std::string>();
            e.depth_path = fe.at("depth").get<std::string>();
            manifest.frames.push_back(e);
        }
        manifest.depth_intrinsics = intrinsics_from_json(j.at("depth_intrinsics"));
        manifest.color_intrinsics = intrinsics_from_json(j.at("color_intrinsics"));
        if (j.contains("extrinsic")) manifest.extrinsic = extrinsic_from_json(j.at("extrinsic"));
        manifest.travel_axis = travel_axis_from_string(j.at("travel_axis").get<std::string>());
        if (j.contains("ground_truth"))
            for (const auto& d : j.at("ground_truth")) manifest.ground_truth.push_back(defect_from_json(d));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("manifest " + manifest_path.string() + ": " + e.what());
    }

    std::vector<core::RGBDFrame> frames;
    frames.reserve(manifest.frames.size());
    for (const auto& fe : manifest.frames) {
        core::RGBDFrame f;
        f.index = fe.index;
        f.color = read_ppm(root / fe.color_path);
        f.depth = read_pgm16(root / fe.depth_path);
        frames.push_back(std::move(f));
    }
    validate_dataset(manifest, frames);
    return {std::move(manifest), std::move(frames)};
}

}  // namespace pave3d::dataio
