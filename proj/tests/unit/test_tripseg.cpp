#include <catch_amalgamated.hpp>

#include <cmath>

#include "aedkit/simtrip.hpp"
#include "aedkit/tripseg.hpp"

using namespace aedkit;
using namespace aedkit::tripseg;
using sensorlog::ActivityLabel;
using sensorlog::BeaconId;
using sensorlog::BeaconSample;
using sensorlog::WifiSample;

namespace {

const BeaconId kTarget{"u", 1, 1};

std::vector<BeaconSample> beacon_seq(std::initializer_list<double> rssi, Millis t0 = 1000) {
    std::vector<BeaconSample> v;
    Millis t = t0;
    for (double r : rssi) {
        v.push_back({t, kTarget, r});
        t += 1000;
    }
    return v;
}

// A model that calls low-motion windows pausing: trained on two synthetic
// trips so the fixture matches the production feature path.
pausenet::PausingModel fixture_model() {
    static pausenet::PausingModel model = [] {
        const auto reg = simtrip::make_campus_registry();
        std::vector<dsp::FeatureWindow> windows;
        for (const auto& script : simtrip::make_training_scripts(6, 424242)) {
            const auto trip = simtrip::synthesize(script, reg);
            auto w = dsp::feature_windows(trip.log.accel, trip.log.gyro);
            dsp::attach_labels(w, trip.log.labels);
            std::erase_if(w, [](const dsp::FeatureWindow& fw) { return !fw.label; });
            windows.insert(windows.end(), w.begin(), w.end());
        }
        auto split = pausenet::stratified_split(windows, 0.7, 1);
        auto aug = pausenet::smote(split.train, 5, 2);
        return pausenet::train(aug.windows, {});
    }();
    return model;
}

} // namespace

TEST_CASE("detect_arrival") {
    SECTION("run starts after a weak sample; dwell 3 fires at the 4th second") {
        const auto seq = beacon_seq({-80, -65, -64, -66, -67});
        const auto t = detect_arrival(seq, kTarget, -70.0, 3);
        REQUIRE(t.has_value());
        CHECK(*t == 4000);
    }
    SECTION("never above threshold -> incomplete") {
        const auto seq = beacon_seq({-80, -79, -85, -90});
        CHECK_FALSE(detect_arrival(seq, kTarget, -70.0, 3).has_value());
    }
    SECTION("threshold met on every sample -> dwell-th sample") {
        const auto seq = beacon_seq({-60, -61, -60, -60});
        const auto t = detect_arrival(seq, kTarget, -70.0, 3);
        REQUIRE(t.has_value());
        CHECK(*t == 3000);
    }
    SECTION("missing seconds break the run") {
        std::vector<BeaconSample> seq{{1000, kTarget, -60},
                                      {2000, kTarget, -60},
                                      // 3000 missing
                                      {4000, kTarget, -60},
                                      {5000, kTarget, -60},
                                      {6000, kTarget, -60}};
        const auto t = detect_arrival(seq, kTarget, -70.0, 3);
        REQUIRE(t.has_value());
        CHECK(*t == 6000);
    }
    SECTION("other beacons do not count") {
        std::vector<BeaconSample> seq{{1000, {"u", 9, 9}, -50},
                                      {2000, {"u", 9, 9}, -50},
                                      {3000, {"u", 9, 9}, -50}};
        CHECK_FALSE(detect_arrival(seq, kTarget, -70.0, 3).has_value());
    }
    SECTION("property: raising the threshold or dwell never makes arrival earlier") {
        Rng rng(60);
        for (int trial = 0; trial < 60; ++trial) {
            std::vector<BeaconSample> seq;
            for (int s = 0; s < 60; ++s)
                seq.push_back({s * 1000, kTarget, rng.uniform(-90.0, -50.0)});
            const auto base = detect_arrival(seq, kTarget, -70.0, 3);
            const auto stricter = detect_arrival(seq, kTarget, -65.0, 3);
            const auto longer = detect_arrival(seq, kTarget, -70.0, 5);
            if (stricter) {
                REQUIRE(base.has_value());
                CHECK(*stricter >= *base);
            }
            if (longer) {
                REQUIRE(base.has_value());
                CHECK(*longer >= *base);
            }
        }
    }
}

TEST_CASE("detect_entry") {
    const std::set<std::string> bssids{"ap:1", "ap:2"};
    SECTION("entry at the start of the confirmed run") {
        std::vector<WifiSample> wifi;
        for (int s = 0; s < 120; ++s) {
            wifi.push_back({s * 1000, "amb", -88});
            if (s >= 90) wifi.push_back({s * 1000, "ap:1", -60});
        }
        const auto t = detect_entry(wifi, bssids, -75.0, 3);
        REQUIRE(t.has_value());
        CHECK(*t == 90000);
    }
    SECTION("no sighting -> nullopt") {
        std::vector<WifiSample> wifi{{0, "amb", -40}, {1000, "amb", -40}};
        CHECK_FALSE(detect_entry(wifi, bssids, -75.0, 3).has_value());
    }
    SECTION("weak sightings do not confirm") {
        std::vector<WifiSample> wifi;
        for (int s = 0; s < 10; ++s) wifi.push_back({s * 1000, "ap:1", -80});
        CHECK_FALSE(detect_entry(wifi, bssids, -75.0, 3).has_value());
    }
    SECTION("empty bssid set is an error") {
        std::vector<WifiSample> wifi{{0, "x", -50}};
        CHECK_THROWS_AS(detect_entry(wifi, {}, -75.0, 3), ValidationError);
    }
}

TEST_CASE("detect_pauses on a scripted walk/stand/walk trace") {
    const auto reg = simtrip::make_campus_registry();
    simtrip::TripScript script;
    script.seed = 8;
    script.trip_id = "p";
    script.participant_id = "P01";
    script.target_aed = "aed-01";
    script.segments = {{simtrip::SegmentKind::walk, 30},
                       {simtrip::SegmentKind::pause, 10},
                       {simtrip::SegmentKind::walk, 20}};
    script.indoor_from = 2;
    const auto trip = simtrip::synthesize(script, reg);
    const auto model = fixture_model();
    const auto det = detect_pauses(trip.log.accel, trip.log.gyro, model);
    REQUIRE(det.intervals.size() == 1);
    // one-window tolerance at each boundary
    CHECK(std::abs(det.intervals[0].begin_ms - 30000) <= 2000);
    CHECK(std::abs(det.intervals[0].end_ms - 40000) <= 2000);
}

TEST_CASE("detect_pauses extremes") {
    const auto reg = simtrip::make_campus_registry();
    const auto model = fixture_model();
    simtrip::TripScript script;
    script.seed = 9;
    script.trip_id = "x";
    script.participant_id = "P01";
    script.target_aed = "aed-01";
    script.indoor_from = 1;

    SECTION("all walking -> no pause intervals") {
        script.segments = {{simtrip::SegmentKind::walk, 30}, {simtrip::SegmentKind::walk, 30}};
        const auto trip = simtrip::synthesize(script, reg);
        const auto det = detect_pauses(trip.log.accel, trip.log.gyro, model);
        CHECK(det.intervals.empty());
    }
    SECTION("all standing -> one interval covering every full window") {
        script.segments = {{simtrip::SegmentKind::pause, 30}, {simtrip::SegmentKind::pause, 30}};
        const auto trip = simtrip::synthesize(script, reg);
        const auto det = detect_pauses(trip.log.accel, trip.log.gyro, model);
        REQUIRE(det.intervals.size() == 1);
        CHECK(det.intervals[0].begin_ms == 0);
        CHECK(det.intervals[0].end_ms == 60000);
    }
}

TEST_CASE("segment: full-trip phases against simulator truth") {
    const auto reg = simtrip::make_campus_registry();
    const auto model = fixture_model();
    simtrip::TripScript script;
    script.seed = 10;
    script.trip_id = "s";
    script.participant_id = "P01";
    script.session_kind = sensorlog::SessionKind::pre_exam;
    script.target_aed = "aed-01";
    script.segments = {{simtrip::SegmentKind::pause, 6},  {simtrip::SegmentKind::walk, 40},
                       {simtrip::SegmentKind::pause, 6},  {simtrip::SegmentKind::walk, 34},
                       {simtrip::SegmentKind::walk, 12},  {simtrip::SegmentKind::pause, 4},
                       {simtrip::SegmentKind::walk, 8},   {simtrip::SegmentKind::pause, 7}};
    script.indoor_from = 4;
    const auto trip = simtrip::synthesize(script, reg);
    const auto ph = segment(trip.log, reg, model);

    REQUIRE(ph.complete());
    CHECK(std::abs(ph.prep_end_ms - trip.truth.prep_end_ms) <= 2000);
    REQUIRE(ph.entry_ms.has_value());
    CHECK(std::abs(*ph.entry_ms - *trip.truth.entry_ms) <= 2000);
    CHECK(std::abs(*ph.arrival_ms - *trip.truth.arrival_ms) <= 2000);

    // exact partition
    CHECK(ph.prep_s() + ph.building_search_s() + ph.indoor_search_s() ==
          Catch::Approx(ph.d_t_s()).margin(1e-9));
    CHECK(ph.d_p_s <= ph.d_t_s());
    CHECK(std::fmod(ph.d_p_s, 2.0) == 0.0);
}

TEST_CASE("segment: trip starting mid-stride has an empty preparation phase") {
    const auto reg = simtrip::make_campus_registry();
    const auto model = fixture_model();
    simtrip::TripScript script;
    script.seed = 12;
    script.trip_id = "m";
    script.participant_id = "P01";
    script.target_aed = "aed-01";
    script.segments = {{simtrip::SegmentKind::walk, 60},
                       {simtrip::SegmentKind::walk, 12},
                       {simtrip::SegmentKind::pause, 7}};
    script.indoor_from = 1;
    const auto trip = simtrip::synthesize(script, reg);
    const auto ph = segment(trip.log, reg, model);
    CHECK(ph.prep_end_ms == ph.start_ms);
    CHECK(ph.prep_s() == 0.0);
}

TEST_CASE("segment: incomplete trip reported without arrival") {
    const auto reg = simtrip::make_campus_registry();
    const auto model = fixture_model();
    simtrip::TripScript script;
    script.seed = 13;
    script.trip_id = "i";
    script.participant_id = "P01";
    script.target_aed = "aed-01";
    script.segments = {{simtrip::SegmentKind::walk, 40}, {simtrip::SegmentKind::walk, 10}};
    script.indoor_from = 1;
    script.final_stand_off_m = 45.0;
    const auto trip = simtrip::synthesize(script, reg);
    const auto ph = segment(trip.log, reg, model);
    CHECK_FALSE(ph.complete());
    bool warned = false;
    for (const auto& w : ph.warnings)
        if (w.find("incomplete") != std::string::npos) warned = true;
    CHECK(warned);
}

TEST_CASE("segment: determinism") {
    const auto reg = simtrip::make_campus_registry();
    const auto model = fixture_model();
    const auto scripts = simtrip::make_training_scripts(2, 5005);
    for (const auto& script : scripts) {
        const auto trip = simtrip::synthesize(script, reg);
        const auto a = segment(trip.log, reg, model);
        const auto b = segment(trip.log, reg, model);
        CHECK(a.prep_end_ms == b.prep_end_ms);
        CHECK(a.entry_ms == b.entry_ms);
        CHECK(a.arrival_ms == b.arrival_ms);
        CHECK(a.d_p_s == b.d_p_s);
        CHECK(a.pause_intervals.size() == b.pause_intervals.size());
    }
}

TEST_CASE("summary CSV round-trip") {
    TripSummary s;
    s.trip_id = "t1";
    s.participant_id = "P01";
    s.session_kind = sensorlog::SessionKind::post_exam_1;
    s.guidance = sensorlog::Guidance::map;
    s.complete = true;
    s.start_ms = 0;
    s.prep_end_ms = 4000;
    s.entry_ms = 60000;
    s.arrival_ms = 100000;
    s.prep_s = 4;
    s.building_s = 56;
    s.indoor_s = 40;
    s.d_t_s = 100;
    s.d_p_s = 12;
    TripSummary incomplete = s;
    incomplete.trip_id = "t2";
    incomplete.complete = false;
    incomplete.entry_ms.reset();
    incomplete.arrival_ms.reset();

    const auto path = std::filesystem::temp_directory_path() / "aedkit-summaries-test.csv";
    write_text_file(path, summaries_to_csv(std::array{s, incomplete}));
    const auto back = summaries_from_csv(path);
    std::filesystem::remove(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].arrival_ms == 100000);
    CHECK(back[0].guidance == sensorlog::Guidance::map);
    CHECK_FALSE(back[1].arrival_ms.has_value());
    CHECK_FALSE(back[1].complete);
}
