#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "pave3d/analyze/analyze.hpp"

using namespace pave3d;
using analyze::DefectMeasurement;
using analyze::ProfileSample;
using analyze::StraightedgeSpan;
using analyze::TransverseProfile;

namespace {

stitch::ElevationMosaic make_mosaic(int w, int h, double gsd,
                                    dataio::TravelAxis axis = dataio::TravelAxis::y) {
    stitch::ElevationMosaic m;
    m.width = w;
    m.height = h;
    m.gsd_mm = gsd;
    m.travel_axis = axis;
    m.elevation.assign(size_t(w) * size_t(h), 0.0);
    m.count.assign(size_t(w) * size_t(h), 1);
    return m;
}

void clear_pixel(stitch::ElevationMosaic& m, int x, int y) {
    m.elevation[size_t(y) * m.width + x] = std::numeric_limits<double>::quiet_NaN();
    m.count[size_t(y) * m.width + x] = 0;
}

void set_pixel(stitch::ElevationMosaic& m, int x, int y, double v) {
    m.elevation[size_t(y) * m.width + x] = v;
    m.count[size_t(y) * m.width + x] = 1;
}

TransverseProfile profile_from(const std::vector<double>& elevations,
                               double spacing_m = 0.002) {
    TransverseProfile p;
    for (size_t i = 0; i < elevations.size(); ++i)
        p.samples.push_back({double(i) * spacing_m, elevations[i]});
    return p;
}

/// Independent straightedge model: every support pair whose connecting line
/// clears the samples between it is a valid straightedge placement; the rut
/// depth is the largest gap under any placement.
double brute_force_straightedge(const std::vector<ProfileSample>& s) {
    const int n = int(s.size());
    double best = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double x0 = s[size_t(i)].offset_m, e0 = s[size_t(i)].elevation_mm;
            const double x1 = s[size_t(j)].offset_m, e1 = s[size_t(j)].elevation_mm;
            bool feasible = true;
            for (int k = i + 1; k < j && feasible; ++k) {
                const double t = (s[size_t(k)].offset_m - x0) / (x1 - x0);
                if (e0 + t * (e1 - e0) < s[size_t(k)].elevation_mm - 1e-12) feasible = false;
            }
            if (!feasible) continue;
            for (int k = i + 1; k < j; ++k) {
                const double t = (s[size_t(k)].offset_m - x0) / (x1 - x0);
                best = std::max(best, e0 + t * (e1 - e0) - s[size_t(k)].elevation_mm);
            }
        }
    return best;
}

}  // namespace

TEST_CASE("extract_profile: flat mosaic gives zero elevations on a uniform grid") {
    const auto mosaic = make_mosaic(60, 600, 2.0);
    const auto profile = analyze::extract_profile(mosaic, 0.5);
    REQUIRE(profile.samples.size() == 60);
    CHECK_FALSE(profile.gap_warning);
    for (const auto& s : profile.samples) CHECK(std::abs(s.elevation_mm) < 0.5);
    for (size_t i = 1; i < profile.samples.size(); ++i)
        CHECK(profile.samples[i].offset_m - profile.samples[i - 1].offset_m ==
              doctest::Approx(0.002).epsilon(1e-12));
    CHECK(profile.samples[0].offset_m == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}

TEST_CASE("extract_profile snaps the station to the nearest cross-section") {
    auto mosaic = make_mosaic(40, 600, 2.0);
    // Encode the row index into the elevations so the sampled row is provable.
    for (int y = 0; y < 600; ++y)
        for (int x = 0; x < 40; ++x) set_pixel(mosaic, x, y, y / 100.0);

    const auto profile = analyze::extract_profile(mosaic, 1.0);
    CHECK(profile.station_m == doctest::Approx(1.0).epsilon(1e-12));
    for (const auto& s : profile.samples)
        CHECK(s.elevation_mm == doctest::Approx(5.0).epsilon(1e-12));  // row 500

    // 1.0004 m / 2 mm = 500.2 -> still row 500.
    const auto near = analyze::extract_profile(mosaic, 1.0004);
    CHECK(near.samples[0].elevation_mm == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(near.station_m == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("extract_profile respects the travel axis") {
    auto mosaic = make_mosaic(600, 40, 2.0, dataio::TravelAxis::x);
    for (int y = 0; y < 40; ++y) set_pixel(mosaic, 500, y, 7.0);
    const auto profile = analyze::extract_profile(mosaic, 1.0);
    REQUIRE(profile.samples.size() == 40);
    for (const auto& s : profile.samples)
        CHECK(s.elevation_mm == doctest::Approx(7.0).epsilon(1e-12));
}

TEST_CASE("extract_profile rejects stations outside the mosaic") {
    const auto mosaic = make_mosaic(40, 600, 2.0);
    CHECK_THROWS_AS(analyze::extract_profile(mosaic, 1.3), StationOutOfRange);
    CHECK_THROWS_AS(analyze::extract_profile(mosaic, -0.05), StationOutOfRange);
    CHECK_NOTHROW(analyze::extract_profile(mosaic, 1.1989));  // row 599
}

TEST_CASE("extract_profile bridges short gaps by linear interpolation") {
    auto mosaic = make_mosaic(60, 20, 2.0);
    for (int x = 0; x < 60; ++x) set_pixel(mosaic, x, 10, double(x));
    for (int x = 20; x <= 25; ++x) clear_pixel(mosaic, x, 10);  // 6-sample gap

    const auto profile = analyze::extract_profile(mosaic, 0.02);
    REQUIRE(profile.samples.size() == 60);
    CHECK_FALSE(profile.gap_warning);
    for (int x = 0; x < 60; ++x)
        CHECK(profile.samples[size_t(x)].elevation_mm ==
              doctest::Approx(double(x)).epsilon(1e-9));
}

TEST_CASE("extract_profile fills a 10-sample gap but splits on an 11-sample gap") {
    auto fill = make_mosaic(60, 10, 2.0);
    for (int x = 30; x <= 39; ++x) clear_pixel(fill, x, 5);
    const auto filled = analyze::extract_profile(fill, 0.01);
    CHECK(filled.samples.size() == 60);
    CHECK_FALSE(filled.gap_warning);

    auto split = make_mosaic(60, 10, 2.0);
    for (int x = 30; x <= 40; ++x) clear_pixel(split, x, 5);
    const auto longest = analyze::extract_profile(split, 0.01);
    CHECK(longest.gap_warning);
    REQUIRE(longest.samples.size() == 30);  // columns 0..29 beat 41..59
    CHECK(longest.samples[0].offset_m == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(longest.samples[29].offset_m == doctest::Approx(0.058).epsilon(1e-12));
}

TEST_CASE("extract_profile throws when too few samples survive") {
    auto mosaic = make_mosaic(60, 10, 2.0);
    for (int x = 0; x < 60; ++x)
        if (x < 26 || x > 33) clear_pixel(mosaic, x, 5);  // 8 valid samples
    CHECK_THROWS_AS(analyze::extract_profile(mosaic, 0.01), ProfileTooSparse);
}

TEST_CASE("rut depth is zero on flat and monotonic profiles") {
    const auto flat = profile_from(std::vector<double>(20, 3.25));
    const auto flat_rut = analyze::rut_depth_straightedge(flat);
    CHECK(flat_rut.depth_mm == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));

    std::vector<double> ramp;
    for (int i = 0; i < 25; ++i) ramp.push_back(1.7 * i);
    const auto ramp_rut = analyze::rut_depth_straightedge(profile_from(ramp));
    CHECK(ramp_rut.depth_mm == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
}

TEST_CASE("rut depth of a 12 mm V-groove is exact and centered") {
    std::vector<double> e(41, 0.0);
    for (int k = 14; k <= 26; ++k) e[size_t(k)] = -12.0 * (1.0 - std::abs(k - 20) / 6.0);
    const auto profile = profile_from(e);
    const auto rut = analyze::rut_depth_straightedge(profile);
    CHECK(rut.depth_mm == doctest::Approx(12.0).epsilon(1e-15));
    CHECK(rut.offset_at_max_m == doctest::Approx(20 * 0.002).epsilon(1e-12));
    CHECK((rut.span == StraightedgeSpan::full_width));
}

TEST_CASE("rut depth matches the brute-force straightedge simulation") {
    std::mt19937 eng(99);
    std::uniform_int_distribution<int> count(30, 60);
    std::uniform_real_distribution<double> bump(-8.0, 4.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = count(eng);
        std::vector<double> e;
        double base = 0.0;
        for (int i = 0; i < n; ++i) {
            base += bump(eng) * 0.3;
            e.push_back(base + bump(eng));
        }
        const auto profile = profile_from(e);
        const auto rut = analyze::rut_depth_straightedge(profile);
        const double oracle = brute_force_straightedge(profile.samples);
        CHECK(rut.depth_mm == doctest::Approx(oracle).epsilon(1e-9).scale(1.0));
    }
}

TEST_CASE("rut depth is translation-invariant and scales linearly") {
    std::mt19937 eng(7);
    std::uniform_real_distribution<double> elev(-10.0, 2.0);
    std::vector<double> e;
    for (int i = 0; i < 40; ++i) e.push_back(elev(eng));

    const auto base = analyze::rut_depth_straightedge(profile_from(e));

    std::vector<double> shifted = e, scaled = e;
    for (auto& v : shifted) v += 123.456;
    for (auto& v : scaled) v *= 2.5;
    const auto shift_rut = analyze::rut_depth_straightedge(profile_from(shifted));
    const auto scale_rut = analyze::rut_depth_straightedge(profile_from(scaled));

    CHECK(shift_rut.depth_mm == doctest::Approx(base.depth_mm).epsilon(1e-9));
    CHECK(shift_rut.offset_at_max_m == doctest::Approx(base.offset_at_max_m).epsilon(1e-12));
    CHECK(scale_rut.depth_mm == doctest::Approx(2.5 * base.depth_mm).epsilon(1e-9));
}

TEST_CASE("sliding 2 m straightedge finds narrow ruts but not broad bowls") {
    // Narrow V-groove on an otherwise flat 4 m profile: some 2 m window
    // holds both shoulders, so the sliding reading equals the full-width one.
    std::vector<double> narrow(2001, 0.0);
    for (int k = 450; k <= 550; ++k)
        narrow[size_t(k)] = -8.0 * (1.0 - std::abs(k - 500) / 50.0);
    const auto narrow_profile = profile_from(narrow);
    const auto full = analyze::rut_depth_straightedge(narrow_profile);
    const auto slide =
        analyze::rut_depth_straightedge(narrow_profile, StraightedgeSpan::sliding_2m);
    CHECK(full.depth_mm == doctest::Approx(8.0).epsilon(1e-12));
    CHECK(slide.depth_mm == doctest::Approx(8.0).epsilon(1e-12));
    CHECK(slide.offset_at_max_m == doctest::Approx(1.0).epsilon(1e-9));
    CHECK((slide.span == StraightedgeSpan::sliding_2m));

    // Broad 4 m bowl: no 2 m window spans it, so the sliding straightedge
    // reads far less than the full-width one.
    std::vector<double> bowl;
    for (int k = 0; k <= 2000; ++k)
        bowl.push_back(-20.0 * std::sin(3.14159265358979323846 * k / 2000.0));
    const auto bowl_profile = profile_from(bowl);
    const auto bowl_full = analyze::rut_depth_straightedge(bowl_profile);
    const auto bowl_slide =
        analyze::rut_depth_straightedge(bowl_profile, StraightedgeSpan::sliding_2m);
    CHECK(bowl_full.depth_mm == doctest::Approx(20.0).epsilon(1e-6));
    CHECK(bowl_slide.depth_mm < 7.0);
    CHECK(bowl_slide.depth_mm > 4.0);
}

TEST_CASE("rut measurement validates its profile") {
    TransverseProfile p;
    CHECK_THROWS_AS(analyze::rut_depth_straightedge(p), ValidationError);
    p.samples = {{0.0, 1.0}, {0.0, 2.0}};  // offsets not increasing
    CHECK_THROWS_AS(analyze::rut_depth_straightedge(p), ValidationError);
}

TEST_CASE("detect_defects: flat mosaic yields nothing") {
    const auto mosaic = make_mosaic(100, 100, 2.0);
    CHECK(analyze::detect_defects(mosaic).empty());
}

TEST_CASE("detect_defects measures a rectangular pit exactly") {
    auto mosaic = make_mosaic(300, 800, 2.0);
    for (int y = 100; y < 300; ++y)
        for (int x = 50; x < 200; ++x) set_pixel(mosaic, x, y, -30.0);

    const auto defects = analyze::detect_defects(mosaic, 5.0, 10000.0);
    REQUIRE(defects.size() == 1);
    const auto& d = defects[0];
    CHECK((d.kind == dataio::DefectKind::pothole));
    CHECK(d.depth_mm == doctest::Approx(30.0).epsilon(1e-12));
    CHECK(d.width_mm == doctest::Approx(300.0).epsilon(1e-12));   // 150 px * 2 mm
    CHECK(d.length_mm == doctest::Approx(400.0).epsilon(1e-12));  // 200 px * 2 mm
    CHECK(d.area_mm2 == doctest::Approx(200.0 * 150.0 * 4.0).epsilon(1e-12));
    CHECK(d.station_m == doctest::Approx(199.5 * 2.0 / 1000.0).epsilon(1e-12));
    CHECK(d.offset_m == doctest::Approx(124.5 * 2.0 / 1000.0).epsilon(1e-12));
}

TEST_CASE("detect_defects applies threshold strictly and gates small areas") {
    auto shallow = make_mosaic(100, 100, 2.0);
    for (auto& v : shallow.elevation) v = -5.0;  // not < -5
    CHECK(analyze::detect_defects(shallow, 5.0, 100.0).empty());

    auto small = make_mosaic(100, 100, 2.0);
    for (int y = 10; y < 20; ++y)
        for (int x = 10; x < 20; ++x) set_pixel(small, x, y, -12.0);  // 400 mm^2
    CHECK(analyze::detect_defects(small, 5.0, 10000.0).empty());
    CHECK(analyze::detect_defects(small, 5.0, 400.0).size() == 1);

    CHECK_THROWS_AS(analyze::detect_defects(small, 0.0, 100.0), ValidationError);
    CHECK_THROWS_AS(analyze::detect_defects(small, 5.0, -1.0), ValidationError);
}

TEST_CASE("detect_defects sorts by descending area and classifies ruts") {
    auto mosaic = make_mosaic(300, 800, 2.0);
    // Small pothole upstream, big pothole downstream.
    for (int y = 50; y < 100; ++y)
        for (int x = 30; x < 80; ++x) set_pixel(mosaic, x, y, -20.0);
    for (int y = 500; y < 650; ++y)
        for (int x = 100; x < 220; ++x) set_pixel(mosaic, x, y, -40.0);
    // Long narrow groove spanning most of the mosaic.
    for (int y = 40; y < 760; ++y)
        for (int x = 260; x < 272; ++x) set_pixel(mosaic, x, y, -15.0);

    const auto defects = analyze::detect_defects(mosaic, 5.0, 9000.0);
    REQUIRE(defects.size() == 3);
    CHECK(defects[0].area_mm2 > defects[1].area_mm2);
    CHECK(defects[1].area_mm2 > defects[2].area_mm2);
    CHECK((defects[0].kind == dataio::DefectKind::pothole));  // 150x120 px block
    CHECK((defects[1].kind == dataio::DefectKind::rut));      // 720x12 px groove
    CHECK((defects[2].kind == dataio::DefectKind::pothole));
    CHECK(defects[1].length_mm == doctest::Approx(1440.0).epsilon(1e-12));
    CHECK(defects[1].width_mm == doctest::Approx(24.0).epsilon(1e-12));
}

TEST_CASE("detect_defects: elongated pit without longitudinal span stays a pothole") {
    auto mosaic = make_mosaic(300, 800, 2.0);
    for (int y = 100; y < 200; ++y)
        for (int x = 100; x < 112; ++x) set_pixel(mosaic, x, y, -15.0);
    const auto defects = analyze::detect_defects(mosaic, 5.0, 2000.0);
    REQUIRE(defects.size() == 1);
    CHECK(defects[0].length_mm / defects[0].width_mm > 3.0);
    CHECK((defects[0].kind == dataio::DefectKind::pothole));  // spans 200 of 1600 mm
}

TEST_CASE("detect_defects total area is monotone in the depth threshold") {
    auto mosaic = make_mosaic(200, 200, 2.0);
    const double cx[3] = {50.0, 120.0, 160.0}, cy[3] = {60.0, 140.0, 40.0};
    const double depth[3] = {8.0, 12.0, 15.0}, sigma[3] = {18.0, 25.0, 12.0};
    for (int y = 0; y < 200; ++y)
        for (int x = 0; x < 200; ++x) {
            double e = 0.0;
            for (int k = 0; k < 3; ++k) {
                const double r2 = (x - cx[k]) * (x - cx[k]) + (y - cy[k]) * (y - cy[k]);
                e -= depth[k] * std::exp(-r2 / (2.0 * sigma[k] * sigma[k]));
            }
            set_pixel(mosaic, x, y, e);
        }
    double prev_area = std::numeric_limits<double>::infinity();
    for (double t : {4.0, 6.0, 9.0, 13.0}) {
        double total = 0.0;
        for (const auto& d : analyze::detect_defects(mosaic, t, 4.0)) total += d.area_mm2;
        CHECK(total <= prev_area);
        prev_area = total;
    }
}

TEST_CASE("defect_mre is zero for exact measurements") {
    std::vector<DefectMeasurement> measured;
    std::vector<dataio::GroundTruthDefect> truth;
    for (int i = 0; i < 4; ++i) {
        DefectMeasurement m;
        m.depth_mm = 30.0 + i;
        m.width_mm = 250.0 + 10 * i;
        m.length_mm = 330.0 + 5 * i;
        m.station_m = 1.0 + i;
        m.offset_m = 0.2 * i;
        measured.push_back(m);
        dataio::GroundTruthDefect t;
        t.depth_mm = m.depth_mm;
        t.width_mm = m.width_mm;
        t.length_mm = m.length_mm;
        t.station_m = m.station_m;
        t.offset_m = m.offset_m;
        truth.push_back(t);
    }
    const auto mre = analyze::defect_mre(measured, truth);
    CHECK(mre.mre_depth_pct == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(mre.mre_width_pct == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(mre.mre_length_pct == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(mre.matched_pairs == 4);
    CHECK(mre.missed_truths == 0);
    CHECK(mre.false_positives == 0);
}

TEST_CASE("defect_mre reproduces the reference per-dimension error levels") {
    DefectMeasurement m;
    m.depth_mm = 103.93;
    m.width_mm = 102.30;
    m.length_mm = 107.22;
    m.station_m = 2.0;
    m.offset_m = 0.0;
    dataio::GroundTruthDefect t;
    t.depth_mm = 100.0;
    t.width_mm = 100.0;
    t.length_mm = 100.0;
    t.station_m = 2.0;
    t.offset_m = 0.0;
    const auto mre = analyze::defect_mre({m}, {t});
    CHECK(mre.mre_depth_pct == doctest::Approx(3.93).epsilon(1e-9));
    CHECK(mre.mre_width_pct == doctest::Approx(2.30).epsilon(1e-9));
    CHECK(mre.mre_length_pct == doctest::Approx(7.22).epsilon(1e-9));
}

TEST_CASE("defect_mre matching respects the 500 mm gate") {
    DefectMeasurement inside;
    inside.depth_mm = 40.0;
    inside.width_mm = 200.0;
    inside.length_mm = 200.0;
    inside.station_m = 1.4;
    inside.offset_m = 0.0;
    DefectMeasurement outside = inside;
    outside.station_m = 3.0;

    dataio::GroundTruthDefect t;
    t.depth_mm = 50.0;
    t.width_mm = 200.0;
    t.length_mm = 200.0;
    t.station_m = 1.0;
    t.offset_m = 0.0;
    dataio::GroundTruthDefect missed = t;
    missed.station_m = 5.0;

    const auto mre = analyze::defect_mre({inside, outside}, {t, missed});
    CHECK(mre.matched_pairs == 1);  // 400 mm away: inside the gate
    CHECK(mre.missed_truths == 1);  // nothing within 500 mm of station 5
    CHECK(mre.false_positives == 1);
    CHECK(mre.mre_depth_pct == doctest::Approx(20.0).epsilon(1e-9));

    DefectMeasurement far = inside;
    far.station_m = 1.6;  // 600 mm from truth
    CHECK_THROWS_AS(analyze::defect_mre({far}, {t}), NoMatchedPairs);
    CHECK_THROWS_AS(analyze::defect_mre({}, {t}), NoMatchedPairs);
}

TEST_CASE("defect_mre is invariant to list order") {
    std::vector<DefectMeasurement> measured;
    std::vector<dataio::GroundTruthDefect> truth;
    std::mt19937 eng(3);
    std::uniform_real_distribution<double> jitter(0.9, 1.1);
    for (int i = 0; i < 5; ++i) {
        dataio::GroundTruthDefect t;
        t.depth_mm = 40.0 + 5 * i;
        t.width_mm = 300.0;
        t.length_mm = 400.0;
        t.station_m = 1.0 + 1.5 * i;
        t.offset_m = -0.5 + 0.25 * i;
        truth.push_back(t);
        DefectMeasurement m;
        m.depth_mm = t.depth_mm * jitter(eng);
        m.width_mm = t.width_mm * jitter(eng);
        m.length_mm = t.length_mm * jitter(eng);
        m.station_m = t.station_m + 0.05;
        m.offset_m = t.offset_m;
        measured.push_back(m);
    }
    const auto base = analyze::defect_mre(measured, truth);
    std::reverse(measured.begin(), measured.end());
    std::reverse(truth.begin(), truth.end());
    const auto flipped = analyze::defect_mre(measured, truth);
    CHECK(base.mre_depth_pct == doctest::Approx(flipped.mre_depth_pct).epsilon(1e-12));
    CHECK(base.mre_width_pct == doctest::Approx(flipped.mre_width_pct).epsilon(1e-12));
    CHECK(base.mre_length_pct == doctest::Approx(flipped.mre_length_pct).epsilon(1e-12));
    CHECK(base.matched_pairs == flipped.matched_pairs);
}

TEST_CASE("linear_fit_r2: perfect line and degenerate inputs") {
    std::vector<std::pair<double, double>> exact;
    for (int i = 1; i <= 6; ++i) exact.emplace_back(double(i), double(i));
    const auto fit = analyze::linear_fit_r2(exact);
    CHECK(fit.slope == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.intercept_mm == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<std::pair<double, double>> constant = {{1.0, 5.0}, {2.0, 5.0}, {3.0, 5.0}};
    CHECK_THROWS_AS(analyze::linear_fit_r2(constant), DegenerateVariance);

    std::vector<std::pair<double, double>> two = {{1.0, 1.0}, {2.0, 2.0}};
    CHECK_THROWS_AS(analyze::linear_fit_r2(two), TooFewPairs);
}

TEST_CASE("linear_fit_r2 regresses estimated on truth, not the reverse") {
    const std::vector<std::pair<double, double>> pairs = {
        {1.0, 1.0}, {2.2, 2.0}, {2.8, 3.0}, {4.1, 4.0}};
    const auto fit = analyze::linear_fit_r2(pairs);
    CHECK(fit.slope == doctest::Approx(0.99).epsilon(1e-12));
    CHECK(fit.intercept_mm == doctest::Approx(0.05).epsilon(1e-9));
    // The reverse orientation would give a different slope (~1.0075^-1).
    CHECK(std::abs(fit.slope - 0.99) < 1e-9);
}

TEST_CASE("linear_fit_r2 agrees with an independent least-squares solve") {
    std::mt19937 eng(41);
    std::uniform_real_distribution<double> height(600.0, 1200.0);
    std::normal_distribution<double> noise(0.0, 4.0);
    std::vector<std::pair<double, double>> pairs;
    for (int i = 0; i < 50; ++i) {
        const double t = height(eng);
        pairs.emplace_back(1.003 * t - 2.0 + noise(eng), t);
    }
    const auto fit = analyze::linear_fit_r2(pairs);

    // Oracle: explicit normal equations on the design matrix [truth, 1].
    double s1 = double(pairs.size()), st = 0, stt = 0, se = 0, ste = 0;
    for (const auto& [e, t] : pairs) {
        st += t;
        stt += t * t;
        se += e;
        ste += t * e;
    }
    const double det = stt * s1 - st * st;
    const double slope = (ste * s1 - st * se) / det;
    const double intercept = (stt * se - st * ste) / det;
    double ss_res = 0, ss_tot = 0;
    const double mean_e = se / s1;
    for (const auto& [e, t] : pairs) {
        ss_res += (e - slope * t - intercept) * (e - slope * t - intercept);
        ss_tot += (e - mean_e) * (e - mean_e);
    }
    CHECK(fit.slope == doctest::Approx(slope).epsilon(1e-9));
    CHECK(fit.intercept_mm == doctest::Approx(intercept).epsilon(1e-6));
    CHECK(fit.r2 == doctest::Approx(1.0 - ss_res / ss_tot).epsilon(1e-9));
    CHECK(fit.r2 <= 1.0);
    CHECK(fit.r2 > 0.99);
}

TEST_CASE("profile CSV export writes the exact documented format") {
    TransverseProfile p;
    p.samples = {{0.0, 1.5}, {0.002, -2.25}, {0.004, 0.0}};
    testing::TempDir dir("csv");
    const auto path = (dir.path() / "profile.csv").string();
    analyze::export_profile_csv(p, path);
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str() ==
          "offset_m,elevation_mm\n"
          "0.000000,1.500000\n"
          "0.002000,-2.250000\n"
          "0.004000,0.000000\n");
}

TEST_CASE("profile SVG export produces a plot with profile and straightedge") {
    std::vector<double> e(60, 0.0);
    for (int k = 20; k <= 40; ++k) e[size_t(k)] = -10.0 * (1.0 - std::abs(k - 30) / 10.0);
    const auto profile = profile_from(e);
    testing::TempDir dir("svg");
    const auto path = (dir.path() / "profile.svg").string();
    analyze::export_profile_svg(profile, path);
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string svg = ss.str();
    CHECK(svg.find("viewBox=\"0 0 800 300\"") != std::string::npos);
    CHECK(svg.find("<polyline") != std::string::npos);
    // Profile trace and hull chord.
    size_t first = svg.find("<polyline");
    CHECK(svg.find("<polyline", first + 1) != std::string::npos);
    CHECK(svg.rfind("</svg>") != std::string::npos);
}

TEST_CASE("defect report is valid JSON with the documented keys") {
    DefectMeasurement d;
    d.kind = dataio::DefectKind::pothole;
    d.depth_mm = 48.5;
    d.width_mm = 290.0;
    d.length_mm = 410.0;
    d.station_m = 1.25;
    d.offset_m = -0.3;
    d.area_mm2 = 95000.0;

    analyze::MreResult mre;
    mre.mre_depth_pct = 3.93;
    mre.mre_width_pct = 2.3;
    mre.mre_length_pct = 7.22;
    mre.matched_pairs = 1;

    analyze::LinearFit fit;
    fit.slope = 1.002;
    fit.intercept_mm = -0.4;
    fit.r2 = 0.997;

    testing::TempDir dir("report");
    const auto path = (dir.path() / "report.json").string();
    analyze::write_defect_report({d}, mre, fit, path);

    std::ifstream in(path);
    const auto doc = nlohmann::json::parse(in);
    REQUIRE(doc.contains("defects"));
    REQUIRE(doc["defects"].size() == 1);
    CHECK(doc["defects"][0]["kind"] == "pothole");
    CHECK(doc["defects"][0]["depth_mm"] == doctest::Approx(48.5));
    CHECK(doc["mre"]["depth_pct"] == doctest::Approx(3.93));
    CHECK(doc["r2"] == doctest::Approx(0.997));
    CHECK(doc["slope"] == doctest::Approx(1.002));
    CHECK(doc["intercept"] == doctest::Approx(-0.4));

    const auto bare = (dir.path() / "bare.json").string();
    analyze::write_defect_report({}, std::nullopt, std::nullopt, bare);
    std::ifstream in2(bare);
    const auto doc2 = nlohmann::json::parse(in2);
    CHECK(doc2["defects"].empty());
    CHECK(doc2["mre"].is_null());
    CHECK(doc2["r2"].is_null());
}
