#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "pave3d/core/geometry.hpp"
#include "pave3d/core/image.hpp"
#include "pave3d/dataio/dataset.hpp"
#include "pave3d/errors.hpp"
#include "pave3d/planefit/planefit.hpp"
#include "pave3d/preprocess/preprocess.hpp"
#include "pave3d/registration/registration.hpp"

namespace pave3d::stitch {

/// Pairwise registration results along a frame sequence.
/// pairwise[i] maps frame i+1 pixel coordinates into frame i.
struct FrameGraph {
    int frame_count = 0;
    int reference_index = 0;
    std::vector<std::optional<registration::EstimateResult>> pairwise;
};

/// Composes the pairwise transforms into one global homography per frame,
/// mapping that frame's pixels into the reference frame's coordinates.
/// Throws BrokenChain when a needed pairwise entry is missing.
std::vector<registration::Homography> chain_transforms(const FrameGraph& graph);

/// Color mosaic plus the global-pixel coordinate of its (0, 0) corner.
struct RgbMosaic {
    core::ColorImage image;
    int origin_x = 0;
    int origin_y = 0;
};

/// Warps every frame into the reference coordinate system (inverse mapping,
/// bilinear sampling) and composites overlaps by distance-to-edge feathering.
RgbMosaic mosaic_rgb(const std::vector<core::ColorImage>& frames,
                     const std::vector<registration::Homography>& globals);

/// Metric elevation mosaic. NaN elevation <=> count 0 <=> no data.
struct ElevationMosaic {
    int width = 0;
    int height = 0;
    std::vector<double> elevation;  ///< mm, NaN where no frame contributed
    std::vector<int> count;         ///< contributing frames per pixel
    double gsd_mm = 0.0;            ///< ground sample distance, mm per pixel
    int origin_x = 0;               ///< global-pixel coordinate of column 0
    int origin_y = 0;               ///< global-pixel coordinate of row 0
    dataio::TravelAxis travel_axis = dataio::TravelAxis::y;

    double at(int x, int y) const { return elevation[size_t(y) * width + x]; }
    int count_at(int x, int y) const { return count[size_t(y) * width + x]; }
    bool has_data(int x, int y) const { return count_at(x, y) > 0; }
    size_t data_count() const;
};

/// Composites leveled per-frame elevation images into the reference frame.
/// `crops[i]` locates elevation frame i inside its color frame's pixel grid
/// (pass an empty vector when the grids coincide). Overlaps are averaged.
/// Throws EmptyInput, GsdNonPositive, and ResolutionMismatch when the crop
/// list length disagrees.
ElevationMosaic mosaic_elevation(const std::vector<planefit::ElevationImage>& frames,
                                 const std::vector<preprocess::CropRect>& crops,
                                 const std::vector<registration::Homography>& globals,
                                 double gsd_mm,
                                 dataio::TravelAxis travel_axis = dataio::TravelAxis::y);

/// ASCII PLY export (x, y, z float; optional uchar red, green, blue).
void export_ply(const core::PointCloud& cloud, const std::string& path);

/// Mosaic export: pixel (col, row) -> (col * gsd, row * gsd, elevation),
/// no-data pixels skipped.
void export_ply(const ElevationMosaic& mosaic, const std::string& path);

/// Binary elevation-grid round trip: magic "ELEV", little-endian header
/// (uint32 width/height, float64 gsd, int32 origin x/y, uint8 travel axis),
/// then width*height float32 elevations (NaN = no data). Counts collapse to
/// 1/0 on reload.
void write_elevation_grid(const ElevationMosaic& mosaic, const std::string& path);
ElevationMosaic read_elevation_grid(const std::string& path);

}  // namespace pave3d::stitch
