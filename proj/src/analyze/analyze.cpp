#include "pave3d/analyze/analyze.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <queue>

#include <nlohmann/json.hpp>

namespace pave3d::analyze {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void require_profile(const TransverseProfile& profile) {
    if (profile.samples.size() < 2)
        throw ValidationError("profile needs at least two samples");
    for (size_t i = 1; i < profile.samples.size(); ++i)
        if (!(profile.samples[i].offset_m > profile.samples[i - 1].offset_m))
            throw ValidationError("profile offsets must be strictly increasing");
}

/// Indices of the upper convex hull of the profile segment [first, last],
/// left to right. Collinear middle points are dropped.
std::vector<int> upper_hull(const std::vector<ProfileSample>& s, int first, int last) {
    std::vector<int> hull;
    for (int i = first; i <= last; ++i) {
        while (hull.size() >= 2) {
            const auto& a = s[size_t(hull[hull.size() - 2])];
            const auto& b = s[size_t(hull.back())];
            const auto& c = s[size_t(i)];
            const double cross = (b.offset_m - a.offset_m) * (c.elevation_mm - a.elevation_mm) -
                                 (b.elevation_mm - a.elevation_mm) * (c.offset_m - a.offset_m);
            if (cross >= 0.0)
                hull.pop_back();
            else
                break;
        }
        hull.push_back(i);
    }
    return hull;
}

/// Largest gap between the taut upper hull and the surface over [first, last].
void straightedge_gap(const std::vector<ProfileSample>& s, int first, int last,
                      double& best_depth, double& best_offset) {
    const auto hull = upper_hull(s, first, last);
    size_t seg = 0;
    for (int i = first; i <= last; ++i) {
        while (seg + 1 < hull.size() - 1 && hull[seg + 1] < i) ++seg;
        const auto& a = s[size_t(hull[seg])];
        const auto& b = s[size_t(hull[seg + 1 < hull.size() ? seg + 1 : seg])];
        double edge = a.elevation_mm;
        if (b.offset_m > a.offset_m) {
            const double t = (s[size_t(i)].offset_m - a.offset_m) / (b.offset_m - a.offset_m);
            edge = a.elevation_mm + t * (b.elevation_mm - a.elevation_mm);
        }
        const double gap = edge - s[size_t(i)].elevation_mm;
        if (gap > best_depth) {
            best_depth = gap;
            best_offset = s[size_t(i)].offset_m;
        }
    }
}

}  // namespace

TransverseProfile extract_profile(const stitch::ElevationMosaic& mosaic, double station_m,
                                  int max_fill_gap) {
    if (mosaic.width <= 0 || mosaic.height <= 0) throw EmptyInput("mosaic holds no pixels");
    if (!(mosaic.gsd_mm > 0.0)) throw GsdNonPositive("mosaic gsd must be positive");
    if (max_fill_gap < 0) throw ValidationError("gap-fill limit must be non-negative");

    const bool travel_y = mosaic.travel_axis == dataio::TravelAxis::y;
    const int long_size = travel_y ? mosaic.height : mosaic.width;
    const int cross_size = travel_y ? mosaic.width : mosaic.height;
    const long idx = std::lround(station_m * 1000.0 / mosaic.gsd_mm);
    if (idx < 0 || idx >= long_size)
        throw StationOutOfRange("station " + std::to_string(station_m) + " m maps to index " +
                                std::to_string(idx) + ", outside [0, " +
                                std::to_string(long_size) + ")");

    std::vector<double> e(size_t(cross_size), kNan);
    for (int c = 0; c < cross_size; ++c) {
        const int x = travel_y ? c : int(idx);
        const int y = travel_y ? int(idx) : c;
        if (mosaic.has_data(x, y)) e[size_t(c)] = mosaic.at(x, y);
    }

    // Fill interior no-data runs short enough to bridge; longer runs split
    // the cut into segments.
    bool unfillable_gap = false;
    int prev_valid = -1;
    for (int c = 0; c < cross_size; ++c) {
        if (std::isnan(e[size_t(c)])) continue;
        if (prev_valid >= 0 && c - prev_valid > 1) {
            const int gap = c - prev_valid - 1;
            if (gap <= max_fill_gap) {
                for (int k = prev_valid + 1; k < c; ++k) {
                    const double t = double(k - prev_valid) / (c - prev_valid);
                    e[size_t(k)] = e[size_t(prev_valid)] * (1.0 - t) + e[size_t(c)] * t;
                }
            } else {
                unfillable_gap = true;
            }
        }
        prev_valid = c;
    }

    // Longest contiguous valid segment (first wins on ties).
    int best_start = 0, best_len = 0, run_start = -1;
    for (int c = 0; c <= cross_size; ++c) {
        const bool valid = c < cross_size && !std::isnan(e[size_t(c)]);
        if (valid && run_start < 0) run_start = c;
        if (!valid && run_start >= 0) {
            if (c - run_start > best_len) {
                best_len = c - run_start;
                best_start = run_start;
            }
            run_start = -1;
        }
    }
    if (best_len < 10)
        throw ProfileTooSparse("only " + std::to_string(best_len) +
                               " usable samples at this station");

    TransverseProfile profile;
    profile.station_m = double(idx) * mosaic.gsd_mm / 1000.0;
    profile.gap_warning = unfillable_gap;
    profile.samples.reserve(size_t(best_len));
    for (int c = best_start; c < best_start + best_len; ++c)
        profile.samples.push_back({c * mosaic.gsd_mm / 1000.0, e[size_t(c)]});
    return profile;
}

RutMeasurement rut_depth_straightedge(const TransverseProfile& profile, StraightedgeSpan span) {
    require_profile(profile);
    const auto& s = profile.samples;
    const int n = int(s.size());

    RutMeasurement out;
    out.span = span;
    out.offset_at_max_m = s[0].offset_m;
    double depth = 0.0, offset = s[0].offset_m;

    if (span == StraightedgeSpan::full_width) {
        straightedge_gap(s, 0, n - 1, depth, offset);
    } else {
        // Place a 2 m straightedge at every sample start; keep the deepest gap.
        int j = 0;
        for (int i = 0; i < n - 1; ++i) {
            if (j < i + 1) j = i + 1;
            while (j + 1 < n && s[size_t(j + 1)].offset_m - s[size_t(i)].offset_m <= 2.0) ++j;
            straightedge_gap(s, i, j, depth, offset);
            if (j == n - 1) break;
        }
    }
    out.depth_mm = std::max(depth, 0.0);
    out.offset_at_max_m = offset;
    return out;
}

std::vector<DefectMeasurement> detect_defects(const stitch::ElevationMosaic& mosaic,
                                              double depth_threshold_mm, double min_area_mm2) {
    if (!(depth_threshold_mm > 0.0)) throw ValidationError("depth threshold must be positive");
    if (!(min_area_mm2 > 0.0)) throw ValidationError("minimum area must be positive");
    if (mosaic.width <= 0 || mosaic.height <= 0) throw EmptyInput("mosaic holds no pixels");
    if (!(mosaic.gsd_mm > 0.0)) throw GsdNonPositive("mosaic gsd must be positive");

    const int w = mosaic.width, h = mosaic.height;
    const double gsd = mosaic.gsd_mm;
    const bool travel_y = mosaic.travel_axis == dataio::TravelAxis::y;
    const double long_extent_mm = (travel_y ? h : w) * gsd;

    std::vector<std::uint8_t> mask(size_t(w) * h, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (mosaic.has_data(x, y) && mosaic.at(x, y) < -depth_threshold_mm)
                mask[size_t(y) * w + x] = 1;

    std::vector<DefectMeasurement> defects;
    std::vector<int> stack;
    for (int y0 = 0; y0 < h; ++y0)
        for (int x0 = 0; x0 < w; ++x0) {
            if (!mask[size_t(y0) * w + x0]) continue;
            int min_x = x0, max_x = x0, min_y = y0, max_y = y0;
            long pixels = 0;
            double sum_x = 0.0, sum_y = 0.0;
            double min_e = 0.0;
            stack.clear();
            stack.push_back(y0 * w + x0);
            mask[size_t(y0) * w + x0] = 0;
            while (!stack.empty()) {
                const int p = stack.back();
                stack.pop_back();
                const int x = p % w, y = p / w;
                ++pixels;
                sum_x += x;
                sum_y += y;
                min_x = std::min(min_x, x);
                max_x = std::max(max_x, x);
                min_y = std::min(min_y, y);
                max_y = std::max(max_y, y);
                min_e = std::min(min_e, mosaic.at(x, y));
                const int nx[4] = {x - 1, x + 1, x, x};
                const int ny[4] = {y, y, y - 1, y + 1};
                for (int k = 0; k < 4; ++k) {
                    if (nx[k] < 0 || nx[k] >= w || ny[k] < 0 || ny[k] >= h) continue;
                    auto& m = mask[size_t(ny[k]) * w + nx[k]];
                    if (!m) continue;
                    m = 0;
                    stack.push_back(ny[k] * w + nx[k]);
                }
            }
            const double area = double(pixels) * gsd * gsd;
            if (area < min_area_mm2) continue;

            DefectMeasurement d;
            d.area_mm2 = area;
            d.depth_mm = -min_e;
            const double extent_x = (max_x - min_x + 1) * gsd;
            const double extent_y = (max_y - min_y + 1) * gsd;
            d.width_mm = travel_y ? extent_x : extent_y;
            d.length_mm = travel_y ? extent_y : extent_x;
            const double cx = sum_x / double(pixels), cy = sum_y / double(pixels);
            d.station_m = (travel_y ? cy : cx) * gsd / 1000.0;
            d.offset_m = (travel_y ? cx : cy) * gsd / 1000.0;
            const bool rut_shape = d.length_mm / d.width_mm > 3.0 &&
                                   d.length_mm > 0.5 * long_extent_mm;
            d.kind = rut_shape ? dataio::DefectKind::rut : dataio::DefectKind::pothole;
            defects.push_back(d);
        }

    std::sort(defects.begin(), defects.end(),
              [](const DefectMeasurement& a, const DefectMeasurement& b) {
                  if (a.area_mm2 != b.area_mm2) return a.area_mm2 > b.area_mm2;
                  if (a.station_m != b.station_m) return a.station_m < b.station_m;
                  return a.offset_m < b.offset_m;
              });
    return defects;
}

std::vector<std::pair<int, int>> match_defects(const std::vector<DefectMeasurement>& measured,
                                               const std::vector<dataio::GroundTruthDefect>& truth,
                                               double gate_mm) {
    if (!(gate_mm > 0.0)) throw ValidationError("matching gate must be positive");
    std::vector<std::pair<int, int>> pairs;
    for (size_t ti = 0; ti < truth.size(); ++ti) {
        const auto& t = truth[ti];
        int best = -1;
        double best_dist = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < measured.size(); ++i) {
            const double dist = std::hypot((measured[i].station_m - t.station_m) * 1000.0,
                                           (measured[i].offset_m - t.offset_m) * 1000.0);
            if (dist < best_dist) {
                best_dist = dist;
                best = int(i);
            }
        }
        if (best >= 0 && best_dist <= gate_mm) pairs.emplace_back(best, int(ti));
    }
    return pairs;
}

MreResult defect_mre(const std::vector<DefectMeasurement>& measured,
                     const std::vector<dataio::GroundTruthDefect>& truth, double gate_mm) {
    const auto pairs = match_defects(measured, truth, gate_mm);

    MreResult out;
    out.matched_pairs = int(pairs.size());
    out.missed_truths = int(truth.size()) - int(pairs.size());
    std::vector<bool> used(measured.size(), false);
    double sum_depth = 0.0, sum_width = 0.0, sum_length = 0.0;
    for (const auto& [mi, ti] : pairs) {
        const auto& m = measured[size_t(mi)];
        const auto& t = truth[size_t(ti)];
        used[size_t(mi)] = true;
        sum_depth += std::abs(m.depth_mm - t.depth_mm) / t.depth_mm;
        sum_width += std::abs(m.width_mm - t.width_mm) / t.width_mm;
        sum_length += std::abs(m.length_mm - t.length_mm) / t.length_mm;
    }
    for (bool u : used)
        if (!u) ++out.false_positives;
    if (out.matched_pairs == 0)
        throw NoMatchedPairs("no measurement lies within " + std::to_string(gate_mm) +
                             " mm of any ground-truth defect");
    out.mre_depth_pct = 100.0 * sum_depth / out.matched_pairs;
    out.mre_width_pct = 100.0 * sum_width / out.matched_pairs;
    out.mre_length_pct = 100.0 * sum_length / out.matched_pairs;
    return out;
}

LinearFit linear_fit_r2(const std::vector<std::pair<double, double>>& pairs) {
    const size_t n = pairs.size();
    if (n < 3) throw TooFewPairs("linear fit needs at least 3 pairs");

    double mean_e = 0.0, mean_t = 0.0;
    for (const auto& [e, t] : pairs) {
        mean_e += e;
        mean_t += t;
    }
    mean_e /= double(n);
    mean_t /= double(n);

    double sxx = 0.0, sxy = 0.0;
    for (const auto& [e, t] : pairs) {
        sxx += (t - mean_t) * (t - mean_t);
        sxy += (t - mean_t) * (e - mean_e);
    }
    if (sxx <= 1e-12 * double(n) * (1.0 + mean_t * mean_t))
        throw DegenerateVariance("truth values are (near-)constant");

    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept_mm = mean_e - fit.slope * mean_t;

    double ss_res = 0.0, ss_tot = 0.0;
    for (const auto& [e, t] : pairs) {
        const double pred = fit.slope * t + fit.intercept_mm;
        ss_res += (e - pred) * (e - pred);
        ss_tot += (e - mean_e) * (e - mean_e);
    }
    fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

void export_profile_csv(const TransverseProfile& profile, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoFailure("cannot open '" + path + "' for writing");
    out << "offset_m,elevation_mm\n";
    char line[80];
    for (const auto& s : profile.samples) {
        std::snprintf(line, sizeof line, "%.6f,%.6f\n", s.offset_m, s.elevation_mm);
        out << line;
    }
    if (!out) throw IoFailure("failed while writing '" + path + "'");
}

void export_profile_svg(const TransverseProfile& profile, const std::string& path) {
    require_profile(profile);
    const auto& s = profile.samples;

    double min_e = s[0].elevation_mm, max_e = min_e;
    for (const auto& p : s) {
        min_e = std::min(min_e, p.elevation_mm);
        max_e = std::max(max_e, p.elevation_mm);
    }
    if (max_e - min_e < 1.0) {
        const double mid = 0.5 * (max_e + min_e);
        min_e = mid - 0.5;
        max_e = mid + 0.5;
    }
    const double x0 = s.front().offset_m, x1 = s.back().offset_m;
    const auto map_x = [&](double off) { return 40.0 + (off - x0) / (x1 - x0) * 740.0; };
    const auto map_y = [&](double e) { return 270.0 - (e - min_e) / (max_e - min_e) * 240.0; };

    std::ofstream out(path);
    if (!out) throw IoFailure("cannot open '" + path + "' for writing");
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 300\">\n"
        << "<rect width=\"800\" height=\"300\" fill=\"white\"/>\n";
    char buf[64];
    out << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
    for (const auto& p : s) {
        std::snprintf(buf, sizeof buf, "%.2f,%.2f ", map_x(p.offset_m), map_y(p.elevation_mm));
        out << buf;
    }
    out << "\"/>\n";
    const auto hull = upper_hull(s, 0, int(s.size()) - 1);
    out << "<polyline fill=\"none\" stroke=\"#d62728\" stroke-width=\"1\" "
           "stroke-dasharray=\"6 3\" points=\"";
    for (int i : hull) {
        std::snprintf(buf, sizeof buf, "%.2f,%.2f ", map_x(s[size_t(i)].offset_m),
                      map_y(s[size_t(i)].elevation_mm));
        out << buf;
    }
    out << "\"/>\n</svg>\n";
    if (!out) throw IoFailure("failed while writing '" + path + "'");
}

void write_defect_report(const std::vector<DefectMeasurement>& defects,
                         const std::optional<MreResult>& mre,
                         const std::optional<LinearFit>& fit, const std::string& path) {
    nlohmann::ordered_json doc;
    doc["defects"] = nlohmann::ordered_json::array();
    for (const auto& d : defects) {
        nlohmann::ordered_json j;
        j["kind"] = dataio::to_string(d.kind);
        j["depth_mm"] = d.depth_mm;
        j["width_mm"] = d.width_mm;
        j["length_mm"] = d.length_mm;
        j["station_m"] = d.station_m;
        j["offset_m"] = d.offset_m;
        j["area_mm2"] = d.area_mm2;
        doc["defects"].push_back(j);
    }
    if (mre) {
        doc["mre"] = {{"depth_pct", mre->mre_depth_pct},
                      {"width_pct", mre->mre_width_pct},
                      {"length_pct", mre->mre_length_pct},
                      {"matched_pairs", mre->matched_pairs},
                      {"missed_truths", mre->missed_truths},
                      {"false_positives", mre->false_positives}};
    } else {
        doc["mre"] = nullptr;
    }
    doc["r2"] = fit ? nlohmann::ordered_json(fit->r2) : nlohmann::ordered_json(nullptr);
    doc["slope"] = fit ? nlohmann::ordered_json(fit->slope) : nlohmann::ordered_json(nullptr);
    doc["intercept"] =
        fit ? nlohmann::ordered_json(fit->intercept_mm) : nlohmann::ordered_json(nullptr);

    std::ofstream out(path);
    if (!out) throw IoFailure("cannot open '" + path + "' for writing");
    out << doc.dump(2) << "\n";
    if (!out) throw IoFailure("failed while writing '" + path + "'");
}

}  // namespace pave3d::analyze
