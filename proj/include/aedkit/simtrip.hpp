#pragma once

// Synthetic, fully labeled retrieval-trip traces. Scripts are ordered
// walk/pause segments with an outdoor->indoor boundary; synthesis emits the
// full six-stream SensorLog plus per-second ground-truth labels and a truth
// record with phase boundaries derived from the noise-free signals. Every
// draw is seeded, so identical seeds give byte-identical CSV output.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "aedkit/common.hpp"
#include "aedkit/geo.hpp"
#include "aedkit/rng.hpp"
#include "aedkit/sensorlog.hpp"

namespace aedkit::simtrip {

using nlohmann::json;
using sensorlog::Guidance;
using sensorlog::Registry;
using sensorlog::SensorLog;
using sensorlog::SessionKind;

enum class SegmentKind { walk, pause };

struct ScriptSegment {
    SegmentKind kind = SegmentKind::walk;
    double duration_s = 0.0;
};

struct TripScript {
    std::uint64_t seed = 0;
    std::string trip_id;
    std::string participant_id;
    SessionKind session_kind = SessionKind::routine;
    Guidance guidance = Guidance::no_map;
    std::string target_aed;
    Millis start_t_ms = 0;
    std::vector<ScriptSegment> segments;
    std::size_t indoor_from = 1;      // segments[indoor_from..] are indoors
    double final_stand_off_m = 0.8;   // distance held at the AED once walking ends

    double total_s() const {
        double t = 0.0;
        for (const auto& s : segments) t += s.duration_s;
        return t;
    }
};

struct TripTruth {
    std::string trip_id;
    Millis start_ms = 0;
    Millis prep_end_ms = 0;
    std::optional<Millis> entry_ms;
    std::optional<Millis> arrival_ms;
    double d_t_s = 0.0; // 0 when incomplete
    double d_p_s = 0.0; // scripted pause time before arrival (whole trace when incomplete)
    std::vector<Interval> pause_intervals;
    bool complete = false;
};

struct SimConfig {
    double gait_amp_g = 0.3;
    double step_hz_lo = 1.8, step_hz_hi = 2.2;
    double walk_noise_g = 0.05;
    double pause_noise_g = 0.02;
    double gyro_amp_rads = 0.5;
    double gyro_walk_noise = 0.05;
    double gyro_pause_noise = 0.02;
    double speed_lo = 1.2, speed_hi = 1.6; // m/s
    double gps_noise_m = 3.0;
    double wifi_rssi_mean = -60.0, wifi_rssi_sd = 4.0;
    double beacon_rssi_1m = -59.0;
    double beacon_path_exponent = 2.2;
    double beacon_noise_sd = 2.0;
    double beacon_range_m = 30.0;
    // Thresholds mirrored from segmentation defaults; the noise-free truth
    // boundaries are computed against these.
    double beacon_rssi_threshold = -70.0;
    int dwell_s = 3;
    double wifi_rssi_threshold = -75.0;
    int confirm_s = 3;
};

namespace detail {

struct SegmentPlan {
    SegmentKind kind;
    double begin_s, end_s;     // relative to trip start
    double speed_mps = 0.0;    // walks only
    double step_hz = 0.0;      // walks only
    double gyro_phase = 0.0;   // walks only
    double dist_end_m = 0.0;   // path distance to the stand-off point at segment end
    bool indoor = false;
};

inline std::vector<SegmentPlan> plan_segments(const TripScript& script, const SimConfig& cfg,
                                              Rng rng) {
    if (script.segments.empty()) throw ValidationError("script has no segments");
    if (script.indoor_from == 0 || script.indoor_from >= script.segments.size())
        throw ValidationError("script: indoor boundary must be inside the segment list");
    std::vector<SegmentPlan> plan;
    double t = 0.0;
    for (std::size_t i = 0; i < script.segments.size(); ++i) {
        const auto& seg = script.segments[i];
        if (!(seg.duration_s > 0.0)) throw ValidationError("script: segment duration must be > 0");
        SegmentPlan p;
        p.kind = seg.kind;
        p.begin_s = t;
        p.end_s = t + seg.duration_s;
        p.indoor = i >= script.indoor_from;
        if (seg.kind == SegmentKind::walk) {
            p.speed_mps = rng.uniform(cfg.speed_lo, cfg.speed_hi);
            p.step_hz = rng.uniform(cfg.step_hz_lo, cfg.step_hz_hi);
            p.gyro_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        }
        t = p.end_s;
        plan.push_back(p);
    }
    // Remaining walking distance at each segment end, accumulated backwards.
    double remaining = 0.0;
    for (std::size_t i = plan.size(); i-- > 0;) {
        plan[i].dist_end_m = remaining;
        if (plan[i].kind == SegmentKind::walk)
            remaining += plan[i].speed_mps * (plan[i].end_s - plan[i].begin_s);
    }
    return plan;
}

inline const SegmentPlan& segment_at(const std::vector<SegmentPlan>& plan, double t_s) {
    for (const auto& p : plan)
        if (t_s < p.end_s) return p;
    return plan.back();
}

// Path distance (m) from the walker to the stand-off point at time t.
inline double remaining_walk_m(const std::vector<SegmentPlan>& plan, double t_s) {
    const SegmentPlan& p = segment_at(plan, t_s);
    double rem = p.dist_end_m;
    if (p.kind == SegmentKind::walk) {
        const double left_s = std::max(0.0, p.end_s - std::min(t_s, p.end_s));
        rem += p.speed_mps * left_s;
    }
    return rem;
}

inline double noise_free_beacon_rssi(double distance_m, const SimConfig& cfg) {
    const double d = std::max(distance_m, 0.1);
    return cfg.beacon_rssi_1m - 10.0 * cfg.beacon_path_exponent * std::log10(d);
}

} // namespace detail

// ---------------------------------------------------------------------------
// Synthesis
// ---------------------------------------------------------------------------

struct SynthesizedTrip {
    SensorLog log;
    TripTruth truth;
};

// Geometry is taken from the registry: the target AED fixes the beacon and
// the building entry point; the walk runs exam_start -> entry -> AED.
inline SynthesizedTrip synthesize(const TripScript& script, const Registry& registry,
                                  const SimConfig& cfg = {}) {
    const auto* aed = registry.find_aed(script.target_aed);
    if (aed == nullptr)
        throw ValidationError("script targets unknown AED '" + script.target_aed + "'");
    const auto* building = registry.find_building(aed->building_id);
    if (building == nullptr)
        throw ValidationError("AED '" + aed->id + "' has no building record");
    const geo::LatLon aed_pos{aed->lat, aed->lon};
    const geo::LatLon entry_pos = building->entry_point;
    const geo::LatLon start_pos = registry.exam_start.value_or(geo::offset_m(entry_pos, -90.0, -60.0));

    Rng root(script.seed);
    const auto plan = detail::plan_segments(script, cfg, root.child(1));
    const double total_s = script.total_s();
    const Millis start = script.start_t_ms;
    const double entry_rel_s = plan[script.indoor_from].begin_s;

    SynthesizedTrip out;
    SensorLog& log = out.log;
    log.manifest = {script.trip_id, script.participant_id, script.session_kind,
                    script.target_aed, script.guidance, start, script.trip_id};

    // --- IMU at 100 Hz -------------------------------------------------------
    {
        Rng rng = root.child(2);
        const auto n = static_cast<std::size_t>(std::llround(total_s * 100.0));
        log.accel.reserve(n + 1);
        for (std::size_t i = 0; i <= n; ++i) {
            const double t = static_cast<double>(i) / 100.0;
            const auto& seg = detail::segment_at(plan, t);
            double x = 0.0, y = 0.0, z = 1.0;
            double sigma = cfg.pause_noise_g;
            if (seg.kind == SegmentKind::walk) {
                z += cfg.gait_amp_g *
                     std::sin(2.0 * std::numbers::pi * seg.step_hz * (t - seg.begin_s));
                sigma = cfg.walk_noise_g;
            }
            log.accel.push_back({start + static_cast<Millis>(i) * 10, x + rng.normal(0, sigma),
                                 y + rng.normal(0, sigma), z + rng.normal(0, sigma)});
        }
    }
    {
        Rng rng = root.child(3);
        const auto n = static_cast<std::size_t>(std::llround(total_s * 100.0));
        log.gyro.reserve(n + 1);
        for (std::size_t i = 0; i <= n; ++i) {
            const double t = static_cast<double>(i) / 100.0;
            const auto& seg = detail::segment_at(plan, t);
            double x = 0.0, y = 0.0, z = 0.0;
            double sigma = cfg.gyro_pause_noise;
            if (seg.kind == SegmentKind::walk) {
                y = cfg.gyro_amp_rads *
                    std::sin(2.0 * std::numbers::pi * seg.step_hz * (t - seg.begin_s) + seg.gyro_phase);
                sigma = cfg.gyro_walk_noise;
            }
            log.gyro.push_back({start + static_cast<Millis>(i) * 10, x + rng.normal(0, sigma),
                                y + rng.normal(0, sigma), z + rng.normal(0, sigma)});
        }
    }

    const double outdoor_path_m =
        detail::remaining_walk_m(plan, 0.0) - detail::remaining_walk_m(plan, entry_rel_s);
    const double indoor_path_m = detail::remaining_walk_m(plan, entry_rel_s);

    // --- 1 Hz streams --------------------------------------------------------
    const auto seconds = static_cast<std::size_t>(std::llround(total_s));
    {
        Rng rng = root.child(4); // GPS
        log.gps.reserve(seconds + 1);
        for (std::size_t i = 0; i <= seconds; ++i) {
            const double t = static_cast<double>(i);
            const bool indoor = t >= entry_rel_s;
            geo::LatLon pos;
            if (!indoor) {
                const double covered = outdoor_path_m - (detail::remaining_walk_m(plan, t) - indoor_path_m);
                const double f = outdoor_path_m > 0.0 ? std::clamp(covered / outdoor_path_m, 0.0, 1.0) : 1.0;
                pos = geo::lerp(start_pos, entry_pos, f);
            } else {
                const double covered = indoor_path_m - detail::remaining_walk_m(plan, t);
                const double f = indoor_path_m > 0.0 ? std::clamp(covered / indoor_path_m, 0.0, 1.0) : 1.0;
                pos = geo::lerp(entry_pos, aed_pos, f);
            }
            pos = geo::offset_m(pos, rng.normal(0, cfg.gps_noise_m), rng.normal(0, cfg.gps_noise_m));
            const double accuracy = indoor ? 15.0 : 5.0;
            log.gps.push_back({start + static_cast<Millis>(i) * 1000, pos.lat, pos.lon, accuracy});
        }
    }
    {
        Rng rng = root.child(5); // Wi-Fi
        std::vector<std::string> target(building->bssids.begin(), building->bssids.end());
        for (std::size_t i = 0; i <= seconds; ++i) {
            const Millis t_ms = start + static_cast<Millis>(i) * 1000;
            log.wifi.push_back({t_ms, "amb:00:11:22:33:44", -88.0 + rng.normal(0, 1.0)});
            if (static_cast<double>(i) >= entry_rel_s) {
                for (const auto& b : target)
                    log.wifi.push_back({t_ms, b, rng.normal(cfg.wifi_rssi_mean, cfg.wifi_rssi_sd)});
            }
        }
    }
    {
        Rng rng = root.child(6); // barometer
        log.baro.reserve(seconds + 1);
        for (std::size_t i = 0; i <= seconds; ++i)
            log.baro.push_back(
                {start + static_cast<Millis>(i) * 1000, 1013.25 + rng.normal(0, 0.05)});
    }
    std::optional<Millis> truth_arrival;
    {
        Rng rng = root.child(7); // beacon; truth from the noise-free profile
        int nf_run = 0;
        for (std::size_t i = 0; i <= seconds; ++i) {
            const double t = static_cast<double>(i);
            const double d = detail::remaining_walk_m(plan, t) + script.final_stand_off_m;
            if (d > cfg.beacon_range_m) {
                nf_run = 0;
                continue;
            }
            const double rssi_nf = detail::noise_free_beacon_rssi(d, cfg);
            const Millis t_ms = start + static_cast<Millis>(i) * 1000;
            log.beacon.push_back({t_ms, aed->beacon_id, rssi_nf + rng.normal(0, cfg.beacon_noise_sd)});
            if (rssi_nf >= cfg.beacon_rssi_threshold) {
                if (++nf_run == cfg.dwell_s && !truth_arrival) truth_arrival = t_ms;
            } else {
                nf_run = 0;
            }
        }
    }

    // --- labels (1 Hz, one row per whole second of the trace) ---------------
    for (std::size_t i = 0; i < seconds; ++i) {
        const auto& seg = detail::segment_at(plan, static_cast<double>(i) + 0.5);
        log.labels.push_back({start + static_cast<Millis>(i) * 1000,
                              seg.kind == SegmentKind::pause
                                  ? sensorlog::ActivityLabel::pausing
                                  : sensorlog::ActivityLabel::moving});
    }

    // --- ground truth --------------------------------------------------------
    TripTruth& truth = out.truth;
    truth.trip_id = script.trip_id;
    truth.start_ms = start;
    double prep_s = 0.0;
    for (const auto& p : plan) {
        if (p.kind != SegmentKind::pause) break;
        prep_s = p.end_s;
    }
    truth.prep_end_ms = start + static_cast<Millis>(std::llround(prep_s * 1000.0));
    truth.entry_ms = start + static_cast<Millis>(std::llround(entry_rel_s * 1000.0));
    truth.arrival_ms = truth_arrival;
    truth.complete = truth_arrival.has_value();
    if (truth.complete && *truth.arrival_ms < *truth.entry_ms)
        throw ValidationError("script '" + script.trip_id + "': entry after arrival");
    const double horizon_s =
        truth.complete ? static_cast<double>(*truth.arrival_ms - start) / 1000.0 : total_s;
    for (const auto& p : plan) {
        if (p.kind != SegmentKind::pause) continue;
        truth.pause_intervals.push_back({start + static_cast<Millis>(std::llround(p.begin_s * 1000.0)),
                                         start + static_cast<Millis>(std::llround(p.end_s * 1000.0))});
        truth.d_p_s += std::max(0.0, std::min(p.end_s, horizon_s) - p.begin_s);
    }
    if (truth.complete) truth.d_t_s = horizon_s;
    return out;
}

// ---------------------------------------------------------------------------
// Script generation
// ---------------------------------------------------------------------------

enum class ScriptStyle {
    exam,  // hesitation-heavy, pre/post exam shape
    corpus // walk-heavy, ~14% pausing seconds; classifier training data
};

inline std::vector<ScriptSegment> make_segments(ScriptStyle style, Rng& rng,
                                                std::size_t* indoor_from) {
    std::vector<ScriptSegment> seg;
    auto pause = [&](std::int64_t lo, std::int64_t hi) {
        seg.push_back({SegmentKind::pause, static_cast<double>(rng.range(lo, hi))});
    };
    auto walk = [&](std::int64_t lo, std::int64_t hi) {
        seg.push_back({SegmentKind::walk, static_cast<double>(rng.range(lo, hi))});
    };
    if (style == ScriptStyle::exam) {
        pause(3, 8); // preparation
        walk(25, 40);
        pause(4, 9);
        walk(25, 40);
        pause(4, 9);
        walk(20, 35);
        *indoor_from = seg.size();
        walk(8, 12);
        pause(3, 6);
        walk(6, 9);
        pause(6, 8); // verification stand
    } else {
        pause(2, 5);
        walk(30, 50);
        pause(3, 6);
        walk(30, 50);
        pause(3, 6);
        walk(30, 50);
        *indoor_from = seg.size();
        walk(8, 12);
        pause(2, 4);
        walk(6, 9);
        pause(6, 7);
    }
    return seg;
}

// A small synthetic campus: two buildings, two AEDs (practiced + novel),
// disjoint BSSID sets, and a designated exam start point.
inline Registry make_campus_registry() {
    Registry reg;
    const geo::LatLon entry1{35.00000, 135.00000};
    const geo::LatLon entry2 = geo::offset_m(entry1, 220.0, 40.0);
    reg.buildings.push_back({"bldg-01", {"b1:ap:01", "b1:ap:02"}, entry1});
    reg.buildings.push_back({"bldg-02", {"b2:ap:01", "b2:ap:02"}, entry2});
    const geo::LatLon aed1 = geo::offset_m(entry1, 12.0, 18.0);
    const geo::LatLon aed2 = geo::offset_m(entry2, -8.0, 14.0);
    reg.aeds.push_back({"aed-01", "Lobby AED", aed1.lat, aed1.lon, "1F", "bldg-01",
                        {"5f2c0001-8a3b-4f0e-9c1d-aedaeda00001", 1, 1}, std::nullopt});
    reg.aeds.push_back({"aed-02", "Annex AED", aed2.lat, aed2.lon, "2F", "bldg-02",
                        {"5f2c0001-8a3b-4f0e-9c1d-aedaeda00001", 1, 2}, std::nullopt});
    reg.exam_start = geo::offset_m(entry1, -110.0, -70.0);
    return reg;
}

struct ParticipantTruth {
    std::string participant_id;
    double d_t_pre = 0, d_t_post = 0;
    double d_p_pre = 0, d_p_post = 0;
    double delta_d_t = 0;
    std::optional<double> delta_d_p;
};

struct CohortResult {
    Registry registry;
    std::vector<SynthesizedTrip> trips; // pre/post per participant, in order
    std::vector<ParticipantTruth> truth;
    double true_median_delta_d_t = 0.0;
    double improvement_factor = 1.0;
    std::uint64_t seed = 0;
};

// Pre/post exam pairs for n participants. Post scripts shrink the
// building-search walks and hesitation pauses by improvement_factor with
// +/-5% per-participant jitter; indoor walking and the terminal
// verification stand are left alone (the stand is mechanism, not
// hesitation). Guidance alternates map / no_map.
inline CohortResult synthesize_cohort(int n_participants, double improvement_factor,
                                      std::uint64_t seed, const SimConfig& cfg = {}) {
    if (n_participants < 2) throw ValidationError("cohort needs at least 2 participants");
    if (!(improvement_factor > 0.0) || improvement_factor > 1.0)
        throw ValidationError("improvement_factor must be in (0,1]");

    CohortResult out;
    out.registry = make_campus_registry();
    out.improvement_factor = improvement_factor;
    out.seed = seed;
    Rng root(seed);

    std::vector<double> deltas;
    for (int p = 0; p < n_participants; ++p) {
        Rng prng = root.child(static_cast<std::uint64_t>(p) + 1);
        char pid[16];
        std::snprintf(pid, sizeof(pid), "P%02d", p + 1);

        std::size_t indoor_from = 0;
        auto pre_segments = make_segments(ScriptStyle::exam, prng, &indoor_from);

        const double jitter = prng.uniform(-0.05, 0.05);
        const double factor = std::clamp(improvement_factor * (1.0 + jitter), 0.05, 1.0);
        auto post_segments = pre_segments;
        for (std::size_t i = 0; i + 1 < post_segments.size(); ++i) {
            auto& seg = post_segments[i];
            const bool shrinkable = seg.kind == SegmentKind::pause ||
                                    (seg.kind == SegmentKind::walk && i < indoor_from);
            if (shrinkable)
                seg.duration_s = std::max(1.0, std::round(seg.duration_s * factor));
        }

        TripScript pre{prng.child(100).seed(), std::string(pid) + "-pre", pid,
                       SessionKind::pre_exam,  p % 2 == 0 ? Guidance::map : Guidance::no_map,
                       "aed-01",               0,
                       pre_segments,           indoor_from,
                       0.8};
        TripScript post = pre;
        post.seed = prng.child(200).seed();
        post.trip_id = std::string(pid) + "-post1";
        post.session_kind = SessionKind::post_exam_1;
        post.segments = post_segments;

        auto pre_trip = synthesize(pre, out.registry, cfg);
        auto post_trip = synthesize(post, out.registry, cfg);
        if (!pre_trip.truth.complete || !post_trip.truth.complete)
            throw ValidationError("cohort script failed to reach the AED");

        ParticipantTruth t;
        t.participant_id = pid;
        t.d_t_pre = pre_trip.truth.d_t_s;
        t.d_t_post = post_trip.truth.d_t_s;
        t.d_p_pre = pre_trip.truth.d_p_s;
        t.d_p_post = post_trip.truth.d_p_s;
        t.delta_d_t = (t.d_t_pre - t.d_t_post) / t.d_t_pre;
        if (t.d_p_pre > 0.0) t.delta_d_p = (t.d_p_pre - t.d_p_post) / t.d_p_pre;
        deltas.push_back(t.delta_d_t);
        out.truth.push_back(std::move(t));
        out.trips.push_back(std::move(pre_trip));
        out.trips.push_back(std::move(post_trip));
    }
    std::sort(deltas.begin(), deltas.end());
    const std::size_t n = deltas.size();
    out.true_median_delta_d_t =
        n % 2 == 1 ? deltas[n / 2] : (deltas[n / 2 - 1] + deltas[n / 2]) / 2.0;
    return out;
}

// Standalone labeled trips (classifier corpus / segmentation checks).
inline std::vector<TripScript> make_training_scripts(int n_trips, std::uint64_t seed) {
    std::vector<TripScript> scripts;
    Rng root(seed);
    for (int i = 0; i < n_trips; ++i) {
        Rng rng = root.child(static_cast<std::uint64_t>(i) + 1);
        char tid[24];
        std::snprintf(tid, sizeof(tid), "trip-%03d", i + 1);
        TripScript s;
        s.seed = rng.child(1).seed();
        s.trip_id = tid;
        s.participant_id = "sim";
        s.session_kind = SessionKind::routine;
        s.guidance = Guidance::no_map;
        s.target_aed = "aed-01";
        s.start_t_ms = 0;
        s.segments = make_segments(ScriptStyle::corpus, rng, &s.indoor_from);
        scripts.push_back(std::move(s));
    }
    return scripts;
}

// Plausible in-app survey responses for two routine visits to the same AED:
// visit-2 ratings drift upward (memory, ease, familiarity, confidence),
// willingness stays near ceiling. Rows are (participant, guidance, visit, Q1..Q5).
inline std::string synthesize_visit_surveys_csv(int n_participants, std::uint64_t seed) {
    Rng root(seed);
    csv::Writer w("participant_id,guidance,visit,q1,q2,q3,q4,q5");
    for (int p = 0; p < n_participants; ++p) {
        Rng rng = root.child(static_cast<std::uint64_t>(p) + 1);
        char pid[16];
        std::snprintf(pid, sizeof(pid), "P%02d", p + 1);
        const char* guidance = p % 2 == 0 ? "map" : "no_map";
        const int first[5] = {static_cast<int>(rng.range(1, 3)), static_cast<int>(rng.range(3, 5)),
                              static_cast<int>(rng.range(1, 3)), static_cast<int>(rng.range(3, 4)),
                              static_cast<int>(rng.range(4, 5))};
        int second[5];
        second[0] = std::min<int>(4, first[0] + static_cast<int>(rng.range(1, 2)));
        second[1] = std::min<int>(5, first[1] + static_cast<int>(rng.range(0, 1)));
        second[2] = std::min<int>(5, first[2] + static_cast<int>(rng.range(2, 3)));
        second[3] = std::min<int>(5, first[3] + static_cast<int>(rng.range(0, 1)));
        second[4] = std::min<int>(5, first[4] + static_cast<int>(rng.range(0, 0)));
        for (int visit = 1; visit <= 2; ++visit) {
            const int* q = visit == 1 ? first : second;
            w.field(std::string(pid)).field(std::string(guidance)).field(visit);
            for (int i = 0; i < 5; ++i) w.field(q[i]);
            w.end_row();
        }
    }
    return w.str();
}

// SUS item responses centred on a favourable score (~80s).
inline std::string synthesize_sus_csv(int n_participants, std::uint64_t seed) {
    Rng root(seed);
    csv::Writer w("participant_id,i1,i2,i3,i4,i5,i6,i7,i8,i9,i10");
    for (int p = 0; p < n_participants; ++p) {
        Rng rng = root.child(static_cast<std::uint64_t>(p) + 1);
        char pid[16];
        std::snprintf(pid, sizeof(pid), "P%02d", p + 1);
        w.field(std::string(pid));
        for (int i = 0; i < 10; ++i) {
            const bool odd_item = i % 2 == 0;
            const int v = odd_item ? static_cast<int>(rng.range(4, 5))   // agree with positives
                                   : static_cast<int>(rng.range(1, 2)); // reject negatives
            w.field(v);
        }
        w.end_row();
    }
    return w.str();
}

// --- truth serialization ------------------------------------------------------

inline json truth_to_json(const TripTruth& t) {
    json j{{"trip_id", t.trip_id},
           {"start_ms", t.start_ms},
           {"prep_end_ms", t.prep_end_ms},
           {"complete", t.complete},
           {"d_t_s", t.d_t_s},
           {"d_p_s", t.d_p_s}};
    if (t.entry_ms) j["entry_ms"] = *t.entry_ms;
    if (t.arrival_ms) j["arrival_ms"] = *t.arrival_ms;
    json intervals = json::array();
    for (const auto& iv : t.pause_intervals)
        intervals.push_back(json{{"begin_ms", iv.begin_ms}, {"end_ms", iv.end_ms}});
    j["pause_intervals"] = intervals;
    return j;
}

inline TripTruth truth_from_json(const json& j) {
    TripTruth t;
    t.trip_id = j.at("trip_id").get<std::string>();
    t.start_ms = j.at("start_ms").get<Millis>();
    t.prep_end_ms = j.at("prep_end_ms").get<Millis>();
    t.complete = j.at("complete").get<bool>();
    t.d_t_s = j.at("d_t_s").get<double>();
    t.d_p_s = j.at("d_p_s").get<double>();
    if (j.contains("entry_ms")) t.entry_ms = j.at("entry_ms").get<Millis>();
    if (j.contains("arrival_ms")) t.arrival_ms = j.at("arrival_ms").get<Millis>();
    for (const auto& iv : j.value("pause_intervals", json::array()))
        t.pause_intervals.push_back({iv.at("begin_ms").get<Millis>(), iv.at("end_ms").get<Millis>()});
    return t;
}

// Write one trip: stream CSVs + manifest under dir/<trip_id>/, truth.json
// beside them.
inline void write_trip(const SynthesizedTrip& trip, const std::filesystem::path& data_dir) {
    sensorlog::save_trip(trip.log, data_dir);
    write_text_file(data_dir / trip.log.manifest.data_subdir / "truth.json",
                    truth_to_json(trip.truth).dump(2) + "\n");
}

} // namespace aedkit::simtrip
