#pragma once

// Data model and file ingestion for trip sensor streams, AED/building
// registries, trip manifests, and post-session survey responses.
//
// Stream files are headered CSV (UTF-8, '\n'):
//   accel.csv  t_ms,x_g,y_g,z_g
//   gyro.csv   t_ms,x_rads,y_rads,z_rads
//   gps.csv    t_ms,lat,lon,acc_m
//   wifi.csv   t_ms,bssid,rssi_dbm
//   baro.csv   t_ms,hpa
//   beacon.csv t_ms,uuid,major,minor,rssi_dbm
//   labels.csv t_ms,label            (optional ground truth)
// Registries and manifests are JSON; see docs/FORMATS.md.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "aedkit/common.hpp"
#include "aedkit/csv.hpp"
#include "aedkit/geo.hpp"

namespace aedkit::sensorlog {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Samples
// ---------------------------------------------------------------------------

struct ImuSample {
    Millis t_ms = 0;
    double x = 0, y = 0, z = 0;
    bool operator==(const ImuSample&) const = default;
};

struct GpsSample {
    Millis t_ms = 0;
    double lat = 0, lon = 0, accuracy_m = 0;
    bool operator==(const GpsSample&) const = default;
};

struct WifiSample {
    Millis t_ms = 0;
    std::string bssid;
    double rssi_dbm = 0;
    bool operator==(const WifiSample&) const = default;
};

struct BaroSample {
    Millis t_ms = 0;
    double hpa = 0;
    bool operator==(const BaroSample&) const = default;
};

struct BeaconId {
    std::string uuid;
    int major = 0;
    int minor = 0;
    bool operator==(const BeaconId&) const = default;
    auto operator<=>(const BeaconId&) const = default;
    std::string str() const {
        return uuid + "/" + std::to_string(major) + "/" + std::to_string(minor);
    }
};

struct BeaconSample {
    Millis t_ms = 0;
    BeaconId id;
    double rssi_dbm = 0;
    bool operator==(const BeaconSample&) const = default;
};

enum class ActivityLabel { moving, pausing };

inline std::string to_string(ActivityLabel l) {
    return l == ActivityLabel::moving ? "moving" : "pausing";
}

inline ActivityLabel activity_from_string(std::string_view s, const std::string& file, std::size_t line) {
    if (s == "moving") return ActivityLabel::moving;
    if (s == "pausing") return ActivityLabel::pausing;
    throw ParseError(file, line, "unknown label '" + std::string(s) + "'");
}

struct LabelSample {
    Millis t_ms = 0;
    ActivityLabel label = ActivityLabel::moving;
    bool operator==(const LabelSample&) const = default;
};

// ---------------------------------------------------------------------------
// Registries
// ---------------------------------------------------------------------------

struct AedRecord {
    std::string id;
    std::string name;
    double lat = 0, lon = 0;
    std::string floor;       // e.g. "2F", "B1"
    std::string building_id;
    BeaconId beacon_id;
    std::optional<double> altitude_m; // accepted in the schema, unused by analyses
    bool operator==(const AedRecord&) const = default;
};

struct BuildingRecord {
    std::string building_id;
    std::set<std::string> bssids;
    geo::LatLon entry_point;
    bool operator==(const BuildingRecord&) const = default;
};

struct Registry {
    std::vector<AedRecord> aeds;
    std::vector<BuildingRecord> buildings;
    std::optional<geo::LatLon> exam_start; // designated exam starting point

    const AedRecord* find_aed(const std::string& id) const {
        for (const auto& a : aeds)
            if (a.id == id) return &a;
        return nullptr;
    }
    const BuildingRecord* find_building(const std::string& id) const {
        for (const auto& b : buildings)
            if (b.building_id == id) return &b;
        return nullptr;
    }
};

// ---------------------------------------------------------------------------
// Manifests and surveys
// ---------------------------------------------------------------------------

enum class SessionKind { pre_exam, post_exam_1, post_exam_2, routine };
enum class Guidance { map, no_map };

inline std::string to_string(SessionKind k) {
    switch (k) {
        case SessionKind::pre_exam: return "pre_exam";
        case SessionKind::post_exam_1: return "post_exam_1";
        case SessionKind::post_exam_2: return "post_exam_2";
        case SessionKind::routine: return "routine";
    }
    return "?";
}

inline SessionKind session_kind_from_string(const std::string& s) {
    if (s == "pre_exam") return SessionKind::pre_exam;
    if (s == "post_exam_1") return SessionKind::post_exam_1;
    if (s == "post_exam_2") return SessionKind::post_exam_2;
    if (s == "routine") return SessionKind::routine;
    throw ValidationError("unknown session_kind '" + s + "'");
}

inline std::string to_string(Guidance g) { return g == Guidance::map ? "map" : "no_map"; }

inline Guidance guidance_from_string(const std::string& s) {
    if (s == "map") return Guidance::map;
    if (s == "no_map") return Guidance::no_map;
    throw ValidationError("unknown guidance '" + s + "'");
}

struct TripManifest {
    std::string trip_id;
    std::string participant_id;
    SessionKind session_kind = SessionKind::routine;
    std::string target_aed;
    Guidance guidance = Guidance::no_map;
    Millis start_t_ms = 0;
    std::string data_subdir; // stream directory relative to manifest, default trip_id
    bool operator==(const TripManifest&) const = default;
};

// Q1 is the 4-point memory-reliance item; Q2..Q5 are 5-point.
struct SurveyResponse {
    std::string trip_id;
    int q1 = 1, q2 = 1, q3 = 1, q4 = 1, q5 = 1;
    bool operator==(const SurveyResponse&) const = default;
};

inline SurveyResponse validate_survey(const std::string& trip_id, const std::array<int, 5>& raw) {
    if (raw[0] < 1 || raw[0] > 4)
        throw ValidationError("survey q1 out of range 1-4: " + std::to_string(raw[0]));
    for (int i = 1; i < 5; ++i)
        if (raw[i] < 1 || raw[i] > 5)
            throw ValidationError("survey q" + std::to_string(i + 1) +
                                  " out of range 1-5: " + std::to_string(raw[i]));
    return SurveyResponse{trip_id, raw[0], raw[1], raw[2], raw[3], raw[4]};
}

// ---------------------------------------------------------------------------
// SensorLog
// ---------------------------------------------------------------------------

struct SensorLog {
    TripManifest manifest;
    std::vector<ImuSample> accel;   // nominal 100 Hz
    std::vector<ImuSample> gyro;    // nominal 100 Hz
    std::vector<GpsSample> gps;     // nominal 1 Hz
    std::vector<WifiSample> wifi;   // nominal 1 Hz (several rows may share t_ms)
    std::vector<BaroSample> baro;   // nominal 1 Hz
    std::vector<BeaconSample> beacon;
    std::vector<LabelSample> labels; // optional ground truth
    std::vector<std::string> warnings;

    bool same_data(const SensorLog& o) const {
        return manifest == o.manifest && accel == o.accel && gyro == o.gyro && gps == o.gps &&
               wifi == o.wifi && baro == o.baro && beacon == o.beacon && labels == o.labels;
    }
};

namespace detail {

// Sort by timestamp (stable, so file order breaks ties), then drop rows with
// a duplicate key keeping the first. IMU/GPS/baro dedupe on t alone; Wi-Fi
// and beacon rows legitimately share timestamps across transmitters, so
// their key includes the transmitter identity.
template <typename S, typename KeyFn>
void finalize_stream(std::vector<S>& v, const char* name, KeyFn key, std::vector<std::string>& warnings) {
    const bool sorted = std::is_sorted(v.begin(), v.end(),
                                       [](const S& a, const S& b) { return a.t_ms < b.t_ms; });
    if (!sorted) {
        std::stable_sort(v.begin(), v.end(), [](const S& a, const S& b) { return a.t_ms < b.t_ms; });
        warnings.push_back(std::string(name) + ": rows out of order, reordered by timestamp");
    }
    std::size_t before = v.size();
    std::set<decltype(key(v.front()))> seen;
    std::erase_if(v, [&](const S& s) { return !seen.insert(key(s)).second; });
    if (v.size() != before)
        warnings.push_back(std::string(name) + ": " + std::to_string(before - v.size()) +
                           " duplicate row(s) collapsed (kept first)");
}

template <typename S>
void check_rate(const std::vector<S>& v, const char* name, double nominal_hz,
                std::vector<std::string>& warnings) {
    if (v.size() < 2) return;
    const double span_s = static_cast<double>(v.back().t_ms - v.front().t_ms) / 1000.0;
    if (span_s <= 0) return;
    const double rate = static_cast<double>(v.size() - 1) / span_s;
    if (rate < 0.8 * nominal_hz || rate > 1.2 * nominal_hz) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.2f", rate);
        warnings.push_back(std::string(name) + ": rate " + buf + " Hz outside " +
                           csv::format_double(nominal_hz) + " Hz +/-20%");
    }
}

inline void expect_fields(const std::vector<std::string_view>& f, std::size_t n,
                          const csv::Reader& r) {
    if (f.size() != n)
        throw ParseError(r.file(), r.line_number(),
                         "expected " + std::to_string(n) + " fields, got " + std::to_string(f.size()));
}

} // namespace detail

// --- stream readers --------------------------------------------------------

inline std::vector<ImuSample> read_imu_csv(const std::filesystem::path& path, bool gyro) {
    csv::Reader r(path, gyro ? "t_ms,x_rads,y_rads,z_rads" : "t_ms,x_g,y_g,z_g");
    std::vector<ImuSample> out;
    std::vector<std::string_view> f;
    while (r.next_row(f)) {
        detail::expect_fields(f, 4, r);
        out.push_back({csv::parse_i64(f[0], r.file(), r.line_number()),
                       csv::parse_double(f[1], r.file(), r.line_number()),
                       csv::parse_double(f[2], r.file(), r.line_number()),
                       csv::parse_double(f[3], r.file(), r.line_number())});
    }
    return out;
}

inline std::vector<GpsSample> read_gps_csv(const std::filesystem::path& path) {
    csv::Reader r(path, "t_ms,lat,lon,acc_m");
    std::vector<GpsSample> out;
    std::vector<std::string_view> f;
    while (r.next_row(f)) {
        detail::expect_fields(f, 4, r);
        out.push_back({csv::parse_i64(f[0], r.file(), r.line_number()),
                       csv::parse_double(f[1], r.file(), r.line_number()),
                       csv::parse_double(f[2], r.file(), r.line_number()),
                       csv::parse_double(f[3], r.file(), r.line_number())});
    }
    return out;
}

inline std::vector<WifiSample> read_wifi_csv(const std::filesystem::path& path) {
    csv::Reader r(path, "t_ms,bssid,rssi_dbm");
    std::vector<WifiSample> out;
    std::vector<std::string_view> f;
    while (r.next_row(f)) {
        detail::expect_fields(f, 3, r);
        out.push_back({csv::parse_i64(f[0], r.file(), r.line_number()), std::string(f[1]),
                       csv::parse_double(f[2], r.file(), r.line_number())});
    }
    return out;
}

inline std::vector<BaroSample> read_baro_csv(const std::filesystem::path& path) {
    csv::Reader r(path, "t_ms,hpa");
    std::vector<BaroSample> out;
    std::vector<std::string_view> f;
    while (r.next_row(f)) {
        detail::expect_fields(f, 2, r);
        out.push_back({csv::parse_i64(f[0], r.file(), r.line_number()),
                       csv::parse_double(f[1], r.file(), r.line_number())});
    }
    return out;
}

inline std::vector<BeaconSample> read_beacon_csv(const std::filesystem::path& path) {
    csv::Reader r(path, "t_ms,uuid,major,minor,rssi_dbm");
    std::vector<BeaconSample> out;
    std::vector<std::string_view> f;
    while (r.next_row(f)) {
        detail::expect_fields(f, 5, r);
        out.push_back({csv::parse_i64(f[0], r.file(), r.line_number()),
                       BeaconId{std::string(f[1]),
                                static_cast<int>(csv::parse_i64(f[2], r.file(), r.line_number())),
                                static_cast<int>(csv::parse_i64(f[3], r.file(), r.line_number()))},
                       csv::parse_double(f[4], r.file(), r.line_number())});
    }
    return out;
}

inline std::vector<LabelSample> read_labels_csv(const std::filesystem::path& path) {
    csv::Reader r(path, "t_ms,label");
    std::vector<LabelSample> out;
    std::vector<std::string_view> f;
    while (r.next_row(f)) {
        detail::expect_fields(f, 2, r);
        out.push_back({csv::parse_i64(f[0], r.file(), r.line_number()),
                       activity_from_string(f[1], r.file(), r.line_number())});
    }
    return out;
}

// --- manifest / registry JSON ----------------------------------------------

inline TripManifest manifest_from_json(const json& j) {
    TripManifest m;
    m.trip_id = j.at("trip_id").get<std::string>();
    m.participant_id = j.at("participant_id").get<std::string>();
    m.session_kind = session_kind_from_string(j.at("session_kind").get<std::string>());
    m.target_aed = j.at("target_aed").get<std::string>();
    m.guidance = guidance_from_string(j.at("guidance").get<std::string>());
    m.start_t_ms = j.at("start_t_ms").get<Millis>();
    m.data_subdir = j.value("data_subdir", m.trip_id);
    return m;
}

inline json manifest_to_json(const TripManifest& m) {
    return json{{"trip_id", m.trip_id},
                {"participant_id", m.participant_id},
                {"session_kind", to_string(m.session_kind)},
                {"target_aed", m.target_aed},
                {"guidance", to_string(m.guidance)},
                {"start_t_ms", m.start_t_ms},
                {"data_subdir", m.data_subdir}};
}

inline TripManifest load_manifest(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw ParseError(path.string(), 0, e.what());
    }
    try {
        return manifest_from_json(j);
    } catch (const json::exception& e) {
        throw ParseError(path.string(), 0, e.what());
    }
}

inline Registry registry_from_json(const json& j) {
    Registry reg;
    for (const auto& ja : j.value("aeds", json::array())) {
        AedRecord a;
        a.id = ja.at("id").get<std::string>();
        a.name = ja.value("name", a.id);
        a.lat = ja.at("lat").get<double>();
        a.lon = ja.at("lon").get<double>();
        a.floor = ja.value("floor", "1F");
        a.building_id = ja.at("building_id").get<std::string>();
        const auto& jb = ja.at("beacon");
        a.beacon_id = {jb.at("uuid").get<std::string>(), jb.at("major").get<int>(),
                       jb.at("minor").get<int>()};
        if (ja.contains("altitude_m")) a.altitude_m = ja.at("altitude_m").get<double>();
        reg.aeds.push_back(std::move(a));
    }
    for (const auto& jb : j.value("buildings", json::array())) {
        BuildingRecord b;
        b.building_id = jb.at("building_id").get<std::string>();
        for (const auto& s : jb.at("bssids")) b.bssids.insert(s.get<std::string>());
        b.entry_point = {jb.at("entry_point").at("lat").get<double>(),
                         jb.at("entry_point").at("lon").get<double>()};
        reg.buildings.push_back(std::move(b));
    }
    if (j.contains("exam_start"))
        reg.exam_start = geo::LatLon{j.at("exam_start").at("lat").get<double>(),
                                     j.at("exam_start").at("lon").get<double>()};

    // Uniqueness and range invariants.
    std::set<std::string> ids;
    std::map<std::string, std::string> beacon_owner;
    for (const auto& a : reg.aeds) {
        if (!ids.insert(a.id).second) throw ValidationError("duplicate AED id '" + a.id + "'");
        if (!geo::valid_coordinate(a.lat, a.lon))
            throw ValidationError("AED '" + a.id + "' has out-of-range coordinates");
        const std::string key = a.beacon_id.str();
        auto [it, fresh] = beacon_owner.emplace(key, a.id);
        if (!fresh)
            throw ValidationError("beacon " + key + " assigned to both '" + it->second + "' and '" +
                                  a.id + "'");
        if (!reg.buildings.empty() && reg.find_building(a.building_id) == nullptr)
            throw ValidationError("AED '" + a.id + "' references unknown building '" +
                                  a.building_id + "'");
    }
    std::set<std::string> building_ids;
    std::map<std::string, std::string> bssid_owner;
    for (const auto& b : reg.buildings) {
        if (!building_ids.insert(b.building_id).second)
            throw ValidationError("duplicate building id '" + b.building_id + "'");
        for (const auto& s : b.bssids) {
            auto [it, fresh] = bssid_owner.emplace(s, b.building_id);
            if (!fresh)
                throw ValidationError("BSSID '" + s + "' shared by buildings '" + it->second +
                                      "' and '" + b.building_id + "'");
        }
    }
    return reg;
}

inline json registry_to_json(const Registry& reg) {
    json aeds = json::array();
    for (const auto& a : reg.aeds) {
        json ja{{"id", a.id},
                {"name", a.name},
                {"lat", a.lat},
                {"lon", a.lon},
                {"floor", a.floor},
                {"building_id", a.building_id},
                {"beacon",
                 {{"uuid", a.beacon_id.uuid}, {"major", a.beacon_id.major}, {"minor", a.beacon_id.minor}}}};
        if (a.altitude_m) ja["altitude_m"] = *a.altitude_m;
        aeds.push_back(std::move(ja));
    }
    json buildings = json::array();
    for (const auto& b : reg.buildings) {
        buildings.push_back(json{{"building_id", b.building_id},
                                 {"bssids", b.bssids},
                                 {"entry_point", {{"lat", b.entry_point.lat}, {"lon", b.entry_point.lon}}}});
    }
    json out{{"aeds", aeds}, {"buildings", buildings}};
    if (reg.exam_start)
        out["exam_start"] = {{"lat", reg.exam_start->lat}, {"lon", reg.exam_start->lon}};
    return out;
}

inline Registry load_registry(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw ParseError(path.string(), 0, e.what());
    }
    return registry_from_json(j);
}

// --- trip loading -----------------------------------------------------------

// Assemble a SensorLog from a manifest and its stream directory. Streams are
// sorted, deduplicated and rate-checked; findings land in log.warnings.
// Pass the registry to enforce target-AED referential integrity.
inline SensorLog load_trip(const std::filesystem::path& manifest_path,
                           const std::filesystem::path& data_dir,
                           const Registry* registry = nullptr) {
    SensorLog log;
    log.manifest = load_manifest(manifest_path);
    if (registry != nullptr && registry->find_aed(log.manifest.target_aed) == nullptr)
        throw ValidationError("trip '" + log.manifest.trip_id + "' targets unknown AED '" +
                              log.manifest.target_aed + "'");

    const std::filesystem::path dir = data_dir / log.manifest.data_subdir;
    auto require = [&](const char* name) {
        std::filesystem::path p = dir / name;
        if (!std::filesystem::exists(p)) throw Error("missing stream file " + p.string());
        return p;
    };

    log.accel = read_imu_csv(require("accel.csv"), false);
    log.gyro = read_imu_csv(require("gyro.csv"), true);
    log.gps = read_gps_csv(require("gps.csv"));
    log.wifi = read_wifi_csv(require("wifi.csv"));
    log.baro = read_baro_csv(require("baro.csv"));
    log.beacon = read_beacon_csv(require("beacon.csv"));
    if (std::filesystem::exists(dir / "labels.csv"))
        log.labels = read_labels_csv(dir / "labels.csv");

    auto t_key = [](const auto& s) { return s.t_ms; };
    detail::finalize_stream(log.accel, "accel", t_key, log.warnings);
    detail::finalize_stream(log.gyro, "gyro", t_key, log.warnings);
    detail::finalize_stream(log.gps, "gps", t_key, log.warnings);
    detail::finalize_stream(log.baro, "baro", t_key, log.warnings);
    detail::finalize_stream(
        log.wifi, "wifi", [](const WifiSample& s) { return std::pair(s.t_ms, s.bssid); },
        log.warnings);
    detail::finalize_stream(
        log.beacon, "beacon", [](const BeaconSample& s) { return std::pair(s.t_ms, s.id); },
        log.warnings);
    detail::finalize_stream(log.labels, "labels", t_key, log.warnings);

    detail::check_rate(log.accel, "accel", 100.0, log.warnings);
    detail::check_rate(log.gyro, "gyro", 100.0, log.warnings);
    detail::check_rate(log.gps, "gps", 1.0, log.warnings);
    detail::check_rate(log.baro, "baro", 1.0, log.warnings);
    detail::check_rate(log.beacon, "beacon", 1.0, log.warnings);

    auto check_start = [&](const auto& v, const char* name) {
        if (!v.empty() && v.front().t_ms < log.manifest.start_t_ms)
            throw ValidationError("trip '" + log.manifest.trip_id + "': " + name +
                                  " starts before manifest start_t");
    };
    check_start(log.accel, "accel");
    check_start(log.gyro, "gyro");
    check_start(log.gps, "gps");
    check_start(log.wifi, "wifi");
    check_start(log.baro, "baro");
    check_start(log.beacon, "beacon");
    return log;
}

// Write the six stream CSVs (+labels when present) and manifest.json under
// dir/<data_subdir>/. save_trip followed by load_trip reproduces the log
// value-exactly; numbers use shortest round-trip formatting.
inline void save_trip(const SensorLog& log, const std::filesystem::path& data_dir) {
    namespace fs = std::filesystem;
    const fs::path dir = data_dir / log.manifest.data_subdir;
    fs::create_directories(dir);

    {
        csv::Writer w("t_ms,x_g,y_g,z_g");
        for (const auto& s : log.accel) {
            w.field(s.t_ms).field(s.x).field(s.y).field(s.z);
            w.end_row();
        }
        w.save(dir / "accel.csv");
    }
    {
        csv::Writer w("t_ms,x_rads,y_rads,z_rads");
        for (const auto& s : log.gyro) {
            w.field(s.t_ms).field(s.x).field(s.y).field(s.z);
            w.end_row();
        }
        w.save(dir / "gyro.csv");
    }
    {
        csv::Writer w("t_ms,lat,lon,acc_m");
        for (const auto& s : log.gps) {
            w.field(s.t_ms).field(s.lat).field(s.lon).field(s.accuracy_m);
            w.end_row();
        }
        w.save(dir / "gps.csv");
    }
    {
        csv::Writer w("t_ms,bssid,rssi_dbm");
        for (const auto& s : log.wifi) {
            w.field(s.t_ms).field(s.bssid).field(s.rssi_dbm);
            w.end_row();
        }
        w.save(dir / "wifi.csv");
    }
    {
        csv::Writer w("t_ms,hpa");
        for (const auto& s : log.baro) {
            w.field(s.t_ms).field(s.hpa);
            w.end_row();
        }
        w.save(dir / "baro.csv");
    }
    {
        csv::Writer w("t_ms,uuid,major,minor,rssi_dbm");
        for (const auto& s : log.beacon) {
            w.field(s.t_ms).field(s.id.uuid).field(s.id.major).field(s.id.minor).field(s.rssi_dbm);
            w.end_row();
        }
        w.save(dir / "beacon.csv");
    }
    if (!log.labels.empty()) {
        csv::Writer w("t_ms,label");
        for (const auto& s : log.labels) {
            w.field(s.t_ms).field(to_string(s.label));
            w.end_row();
        }
        w.save(dir / "labels.csv");
    }
    write_text_file(dir / "manifest.json", manifest_to_json(log.manifest).dump(2) + "\n");
}

} // namespace aedkit::sensorlog
