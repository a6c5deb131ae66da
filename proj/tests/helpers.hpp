#pragma once

#include <atomic>
#include <filesystem>
#include <string>

#include "pave3d/core/camera.hpp"
#include "pave3d/core/image.hpp"

namespace pave3d::testing {

/// Unique scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("pave3d_" + tag + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path path(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline core::CameraIntrinsics test_intrinsics(int w = 640, int h = 480, double f = 580.0) {
    core::CameraIntrinsics intr;
    intr.fx = f;
    intr.fy = f;
    intr.cx = (w - 1) / 2.0;
    intr.cy = (h - 1) / 2.0;
    intr.width = w;
    intr.height = h;
    return intr;
}

inline core::DepthImage constant_depth(int w, int h, std::uint16_t value) {
    core::DepthImage img(w, h);
    for (auto& p : img.pixels) p = value;
    return img;
}

}  // namespace pave3d::testing
