#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pave3d/dataio/dataset.hpp"
#include "pave3d/errors.hpp"
#include "pave3d/stitch/stitch.hpp"

namespace pave3d::analyze {

/// One elevation sample along a transverse cut.
struct ProfileSample {
    double offset_m = 0.0;      ///< transverse position, meters
    double elevation_mm = 0.0;  ///< leveled elevation, millimeters
};

/// Elevation profile across the pavement at one longitudinal station.
/// Offsets are strictly increasing and uniformly spaced by the mosaic gsd.
struct TransverseProfile {
    double station_m = 0.0;
    std::vector<ProfileSample> samples;
    bool gap_warning = false;  ///< true when an unfillable gap split the cut
};

/// Samples the mosaic cross-section nearest to `station_m` along the travel
/// axis. No-data runs of at most `max_fill_gap` samples between valid
/// neighbors are filled by linear interpolation; longer gaps split the cut
/// and the longest contiguous segment is returned with `gap_warning` set.
/// Throws StationOutOfRange and ProfileTooSparse (< 10 samples survive).
TransverseProfile extract_profile(const stitch::ElevationMosaic& mosaic, double station_m,
                                  int max_fill_gap = 10);

enum class StraightedgeSpan { full_width, sliding_2m };

/// Simulated straightedge reading over a transverse profile.
struct RutMeasurement {
    double depth_mm = 0.0;        ///< largest gap under the straightedge
    double offset_at_max_m = 0.0; ///< where the gap peaks (lowest offset on ties)
    StraightedgeSpan span = StraightedgeSpan::full_width;
};

/// Lays a straightedge across the profile: the upper convex hull of
/// (offset, elevation) is the taut edge, and the rut depth is the largest
/// vertical gap between the edge and the surface. `sliding_2m` repeats the
/// computation in every 2 m window and keeps the overall maximum.
RutMeasurement rut_depth_straightedge(const TransverseProfile& profile,
                                      StraightedgeSpan span = StraightedgeSpan::full_width);

/// One segmented depression, measured in metric units.
struct DefectMeasurement {
    dataio::DefectKind kind = dataio::DefectKind::pothole;
    double depth_mm = 0.0;
    double width_mm = 0.0;   ///< transverse bounding-box extent
    double length_mm = 0.0;  ///< longitudinal bounding-box extent
    double station_m = 0.0;  ///< mask centroid, longitudinal
    double offset_m = 0.0;   ///< mask centroid, transverse
    double area_mm2 = 0.0;
};

/// Thresholds the mosaic at `-depth_threshold_mm`, labels 4-connected
/// components, and keeps those covering at least `min_area_mm2`. Components
/// with length/width > 3 that span more than half of the mosaic's
/// longitudinal extent are classified as ruts, the rest as potholes.
/// Results are sorted by descending area.
std::vector<DefectMeasurement> detect_defects(const stitch::ElevationMosaic& mosaic,
                                              double depth_threshold_mm = 5.0,
                                              double min_area_mm2 = 10000.0);

/// Accuracy of measured defects against ground truth, matched by nearest
/// centroid within a 500 mm gate.
struct MreResult {
    double mre_depth_pct = 0.0;
    double mre_width_pct = 0.0;
    double mre_length_pct = 0.0;
    int matched_pairs = 0;
    int missed_truths = 0;     ///< truth defects with no measurement in the gate
    int false_positives = 0;   ///< measurements no truth defect matched
};

/// Pairs each truth defect with its nearest measurement by centroid
/// distance; pairs farther than `gate_mm` apart are dropped. Returns
/// (measured index, truth index) per matched truth defect, in truth order.
std::vector<std::pair<int, int>> match_defects(const std::vector<DefectMeasurement>& measured,
                                               const std::vector<dataio::GroundTruthDefect>& truth,
                                               double gate_mm = 500.0);

/// Mean relative error per dimension over matched (measured, truth) pairs.
/// Throws NoMatchedPairs when nothing falls inside the matching gate.
MreResult defect_mre(const std::vector<DefectMeasurement>& measured,
                     const std::vector<dataio::GroundTruthDefect>& truth,
                     double gate_mm = 500.0);

/// Ordinary least squares of estimated on truth.
struct LinearFit {
    double slope = 0.0;
    double intercept_mm = 0.0;
    double r2 = 0.0;
};

/// Fits estimated = slope * truth + intercept and reports r2 = 1 - SSres/SStot.
/// `pairs` holds (estimated, truth). Throws TooFewPairs (< 3) and
/// DegenerateVariance (constant truth).
LinearFit linear_fit_r2(const std::vector<std::pair<double, double>>& pairs);

/// CSV export: header `offset_m,elevation_mm`, six decimal places per field.
void export_profile_csv(const TransverseProfile& profile, const std::string& path);

/// Standalone SVG plot (800x300 viewbox): profile polyline plus the upper
/// convex hull chord the straightedge rests on.
void export_profile_svg(const TransverseProfile& profile, const std::string& path);

/// UTF-8 JSON report: keys defects[], mre, r2, slope, intercept.
void write_defect_report(const std::vector<DefectMeasurement>& defects,
                         const std::optional<MreResult>& mre,
                         const std::optional<LinearFit>& fit, const std::string& path);

}  // namespace pave3d::analyze
