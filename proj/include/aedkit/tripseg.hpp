#pragma once

// Trip segmentation: beacon-verified arrival, Wi-Fi-confirmed building
// entry, classifier-driven pause detection, and the three-phase partition
// Preparation / Building Search / Indoor AED Search.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "aedkit/common.hpp"
#include "aedkit/dsp.hpp"
#include "aedkit/metrics.hpp"
#include "aedkit/pausenet.hpp"
#include "aedkit/sensorlog.hpp"

namespace aedkit::tripseg {

using nlohmann::json;
using sensorlog::ActivityLabel;
using sensorlog::BeaconId;
using sensorlog::Registry;
using sensorlog::SensorLog;

struct SegConfig {
    double beacon_rssi_threshold_dbm = -70.0;
    int dwell_s = 3;
    double wifi_rssi_threshold_dbm = -75.0;
    int confirm_s = 3;
};

// Arrival is the moment the dwell requirement is first met: the timestamp
// of the qualifying sighting in the dwell_s-th consecutive qualifying
// second. Seconds are wall-clock buckets floor(t/1000); a second with no
// qualifying sighting breaks the run.
inline std::optional<Millis> detect_arrival(std::span<const sensorlog::BeaconSample> beacon,
                                            const BeaconId& target, double rssi_threshold_dbm,
                                            int dwell_s) {
    if (dwell_s < 1) throw ValidationError("dwell must be >= 1 s");
    std::optional<Millis> prev_bucket;
    int run = 0;
    for (const auto& s : beacon) {
        if (!(s.id == target) || s.rssi_dbm < rssi_threshold_dbm) continue;
        const Millis bucket = s.t_ms >= 0 ? s.t_ms / 1000 : (s.t_ms - 999) / 1000;
        if (prev_bucket && bucket == *prev_bucket) continue;
        run = (prev_bucket && bucket == *prev_bucket + 1) ? run + 1 : 1;
        prev_bucket = bucket;
        if (run >= dwell_s) return s.t_ms;
    }
    return std::nullopt;
}

// Entry is the start of the first run of >= confirm_s consecutive seconds
// each containing a target-building BSSID at or above the threshold.
inline std::optional<Millis> detect_entry(std::span<const sensorlog::WifiSample> wifi,
                                          const std::set<std::string>& building_bssids,
                                          double rssi_threshold_dbm, int confirm_s) {
    if (building_bssids.empty()) throw ValidationError("building has no BSSIDs");
    if (confirm_s < 1) throw ValidationError("confirm must be >= 1 s");
    std::optional<Millis> prev_bucket;
    std::optional<Millis> run_start_t;
    int run = 0;
    for (const auto& s : wifi) {
        if (s.rssi_dbm < rssi_threshold_dbm || !building_bssids.contains(s.bssid)) continue;
        const Millis bucket = s.t_ms >= 0 ? s.t_ms / 1000 : (s.t_ms - 999) / 1000;
        if (prev_bucket && bucket == *prev_bucket) continue;
        if (prev_bucket && bucket == *prev_bucket + 1) {
            ++run;
        } else {
            run = 1;
            run_start_t = s.t_ms;
        }
        prev_bucket = bucket;
        if (run >= confirm_s) return run_start_t;
    }
    return std::nullopt;
}

struct PauseDetection {
    std::vector<dsp::FeatureWindow> windows; // label = predicted state
    std::vector<Interval> intervals;          // maximal runs of pausing windows
};

// Classify each 2 s window and merge maximal runs of pausing windows.
inline PauseDetection detect_pauses(std::span<const sensorlog::ImuSample> accel,
                                    std::span<const sensorlog::ImuSample> gyro,
                                    const pausenet::PausingModel& model) {
    PauseDetection out;
    out.windows = dsp::feature_windows(accel, gyro);
    for (auto& w : out.windows)
        w.label = pausenet::predict(model, std::span<const double>(w.features));
    for (std::size_t i = 0; i < out.windows.size();) {
        if (*out.windows[i].label != ActivityLabel::pausing) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < out.windows.size() && *out.windows[j + 1].label == ActivityLabel::pausing)
            ++j;
        out.intervals.push_back(
            {out.windows[i].start_ms, out.windows[j].start_ms + dsp::kWindowMs});
        i = j + 1;
    }
    return out;
}

struct TripPhases {
    std::string trip_id;
    Millis start_ms = 0;
    Millis prep_end_ms = 0;
    std::optional<Millis> entry_ms;
    std::optional<Millis> arrival_ms;
    double d_p_s = 0.0;
    std::vector<Interval> pause_intervals;
    std::vector<std::string> warnings;

    bool complete() const { return arrival_ms.has_value(); }
    double prep_s() const { return static_cast<double>(prep_end_ms - start_ms) / 1000.0; }
    double building_search_s() const {
        return entry_ms ? static_cast<double>(*entry_ms - prep_end_ms) / 1000.0 : 0.0;
    }
    double indoor_search_s() const {
        return arrival_ms && entry_ms ? static_cast<double>(*arrival_ms - *entry_ms) / 1000.0 : 0.0;
    }
    double d_t_s() const {
        return arrival_ms ? static_cast<double>(*arrival_ms - start_ms) / 1000.0 : 0.0;
    }
};

// Segment one trip. Boundary rules:
//  - prep_end = end of the maximal initial run of pausing windows (trip
//    start if the first window is moving);
//  - entry from Wi-Fi confirmation, degenerate-cased to arrival when the
//    beacon fires without Wi-Fi confirmation, then clamped into
//    [prep_end, arrival] so the three phases always partition the trip;
//  - D_P counts pausing windows fully inside [start, arrival]; counting
//    windows that merely start before arrival could exceed D_T at the
//    boundary, which the D_P <= D_T invariant forbids.
inline TripPhases segment(const SensorLog& log, const Registry& registry,
                          const pausenet::PausingModel& model, const SegConfig& cfg = {}) {
    const auto* aed = registry.find_aed(log.manifest.target_aed);
    if (aed == nullptr)
        throw ValidationError("trip '" + log.manifest.trip_id + "' targets unknown AED '" +
                              log.manifest.target_aed + "'");
    const auto* building = registry.find_building(aed->building_id);
    if (building == nullptr)
        throw ValidationError("AED '" + aed->id + "' references unknown building '" +
                              aed->building_id + "'");

    TripPhases ph;
    ph.trip_id = log.manifest.trip_id;
    ph.start_ms = log.manifest.start_t_ms;

    ph.arrival_ms = log.beacon.empty()
                        ? std::nullopt
                        : detect_arrival(log.beacon, aed->beacon_id, cfg.beacon_rssi_threshold_dbm,
                                         cfg.dwell_s);
    if (!ph.arrival_ms)
        ph.warnings.push_back("incomplete trip: no beacon-verified arrival");

    auto entry = detect_entry(log.wifi, building->bssids, cfg.wifi_rssi_threshold_dbm,
                              cfg.confirm_s);
    if (!entry && ph.arrival_ms) {
        entry = ph.arrival_ms;
        ph.warnings.push_back("no Wi-Fi entry confirmation; entry set to arrival");
    }

    const PauseDetection pauses = detect_pauses(log.accel, log.gyro, model);

    // Initial pausing run = Preparation.
    Millis prep_end = ph.start_ms;
    for (const auto& w : pauses.windows) {
        if (*w.label != ActivityLabel::pausing) break;
        prep_end = w.start_ms + dsp::kWindowMs;
    }
    ph.prep_end_ms = prep_end;

    if (ph.arrival_ms) {
        ph.prep_end_ms = std::min(ph.prep_end_ms, *ph.arrival_ms);
        if (entry) {
            Millis e = std::max(*entry, ph.prep_end_ms);
            if (e > *ph.arrival_ms) {
                ph.warnings.push_back("entry after arrival; clamped to arrival");
                e = *ph.arrival_ms;
            }
            ph.entry_ms = e;
        }
    } else {
        ph.entry_ms = entry ? std::optional<Millis>(std::max(*entry, ph.prep_end_ms)) : std::nullopt;
    }

    const Millis horizon = ph.arrival_ms ? *ph.arrival_ms
                                         : (pauses.windows.empty()
                                                ? ph.start_ms
                                                : pauses.windows.back().start_ms + dsp::kWindowMs);
    int pausing_windows = 0;
    for (const auto& w : pauses.windows)
        if (*w.label == ActivityLabel::pausing && w.start_ms + dsp::kWindowMs <= horizon)
            ++pausing_windows;
    ph.d_p_s = 2.0 * pausing_windows;

    for (const auto& iv : pauses.intervals) {
        Interval clipped{iv.begin_ms, std::min(iv.end_ms, horizon)};
        // Whole windows only; drop the straddling tail.
        clipped.end_ms = clipped.begin_ms + (clipped.length_ms() / dsp::kWindowMs) * dsp::kWindowMs;
        if (clipped.length_ms() > 0) ph.pause_intervals.push_back(clipped);
    }
    for (const auto& w : log.warnings) ph.warnings.push_back(w);
    return ph;
}

// ---------------------------------------------------------------------------
// Output forms
// ---------------------------------------------------------------------------

inline double round1(double v) { return std::round(v * 10.0) / 10.0; }

inline json phases_to_json(const TripPhases& ph) {
    json j{{"trip_id", ph.trip_id},
           {"complete", ph.complete()},
           {"start_ms", ph.start_ms},
           {"prep_end_ms", ph.prep_end_ms},
           {"durations_s",
            {{"preparation", round1(ph.prep_s())},
             {"building_search", round1(ph.building_search_s())},
             {"indoor_search", round1(ph.indoor_search_s())},
             {"total", round1(ph.d_t_s())},
             {"pause", round1(ph.d_p_s)}}},
           {"warnings", ph.warnings}};
    if (ph.entry_ms) j["entry_ms"] = *ph.entry_ms;
    if (ph.arrival_ms) j["arrival_ms"] = *ph.arrival_ms;
    json intervals = json::array();
    for (const auto& iv : ph.pause_intervals)
        intervals.push_back(json{{"begin_ms", iv.begin_ms}, {"end_ms", iv.end_ms}});
    j["pause_intervals"] = intervals;
    return j;
}

// One row per trip for downstream statistics.
struct TripSummary {
    std::string trip_id;
    std::string participant_id;
    sensorlog::SessionKind session_kind = sensorlog::SessionKind::routine;
    sensorlog::Guidance guidance = sensorlog::Guidance::no_map;
    bool complete = false;
    Millis start_ms = 0;
    Millis prep_end_ms = 0;
    std::optional<Millis> entry_ms;
    std::optional<Millis> arrival_ms;
    double prep_s = 0, building_s = 0, indoor_s = 0, d_t_s = 0, d_p_s = 0;
};

inline TripSummary summarize(const sensorlog::TripManifest& manifest, const TripPhases& ph) {
    TripSummary s;
    s.trip_id = ph.trip_id;
    s.participant_id = manifest.participant_id;
    s.session_kind = manifest.session_kind;
    s.guidance = manifest.guidance;
    s.complete = ph.complete();
    s.start_ms = ph.start_ms;
    s.prep_end_ms = ph.prep_end_ms;
    s.entry_ms = ph.entry_ms;
    s.arrival_ms = ph.arrival_ms;
    s.prep_s = ph.prep_s();
    s.building_s = ph.building_search_s();
    s.indoor_s = ph.indoor_search_s();
    s.d_t_s = ph.d_t_s();
    s.d_p_s = ph.d_p_s;
    return s;
}

inline std::string summaries_csv_header() {
    return "trip_id,participant_id,session_kind,guidance,complete,start_ms,prep_end_ms,entry_ms,"
           "arrival_ms,prep_s,building_s,indoor_s,d_t_s,d_p_s";
}

inline std::string summaries_to_csv(std::span<const TripSummary> rows) {
    csv::Writer w(summaries_csv_header());
    for (const auto& s : rows) {
        w.field(s.trip_id)
            .field(s.participant_id)
            .field(sensorlog::to_string(s.session_kind))
            .field(sensorlog::to_string(s.guidance))
            .field(std::string(s.complete ? "1" : "0"))
            .field(s.start_ms)
            .field(s.prep_end_ms)
            .field(s.entry_ms ? std::to_string(*s.entry_ms) : std::string{})
            .field(s.arrival_ms ? std::to_string(*s.arrival_ms) : std::string{})
            .field(s.prep_s)
            .field(s.building_s)
            .field(s.indoor_s)
            .field(s.d_t_s)
            .field(s.d_p_s);
        w.end_row();
    }
    return w.str();
}

inline std::vector<TripSummary> summaries_from_csv(const std::filesystem::path& path) {
    csv::Reader r(path, summaries_csv_header());
    std::vector<TripSummary> out;
    std::vector<std::string_view> f;
    while (r.next_row(f)) {
        if (f.size() != 14) throw ParseError(r.file(), r.line_number(), "expected 14 fields");
        TripSummary s;
        s.trip_id = std::string(f[0]);
        s.participant_id = std::string(f[1]);
        s.session_kind = sensorlog::session_kind_from_string(std::string(f[2]));
        s.guidance = sensorlog::guidance_from_string(std::string(f[3]));
        s.complete = f[4] == "1";
        s.start_ms = csv::parse_i64(f[5], r.file(), r.line_number());
        s.prep_end_ms = csv::parse_i64(f[6], r.file(), r.line_number());
        if (!f[7].empty()) s.entry_ms = csv::parse_i64(f[7], r.file(), r.line_number());
        if (!f[8].empty()) s.arrival_ms = csv::parse_i64(f[8], r.file(), r.line_number());
        s.prep_s = csv::parse_double(f[9], r.file(), r.line_number());
        s.building_s = csv::parse_double(f[10], r.file(), r.line_number());
        s.indoor_s = csv::parse_double(f[11], r.file(), r.line_number());
        s.d_t_s = csv::parse_double(f[12], r.file(), r.line_number());
        s.d_p_s = csv::parse_double(f[13], r.file(), r.line_number());
        out.push_back(std::move(s));
    }
    return out;
}

inline metrics::TripDurations to_durations(const TripSummary& s) {
    return {s.trip_id, s.participant_id, s.session_kind, s.guidance, s.complete, s.d_t_s, s.d_p_s};
}

} // namespace aedkit::tripseg
