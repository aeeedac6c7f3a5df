#pragma once

// Deterministic state machine replaying exam and routine session flows.
// Events arrive strictly ordered per session; illegal events are rejected
// with a reason and leave the state untouched.
//
// Exam flow:    Registered -> PreExamPending -> Approaching -> ReadyToStart
//               -> Countdown -> Hunting -> Verified -> SurveyPending -> Completed
// Routine flow: Registered -> Countdown -> ... (no approach gate; routine is
//               start-anywhere but requires a completed pre-exam).

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "aedkit/common.hpp"
#include "aedkit/geo.hpp"
#include "aedkit/metrics.hpp"
#include "aedkit/sensorlog.hpp"

namespace aedkit::session {

using nlohmann::json;
using sensorlog::BeaconId;
using sensorlog::Registry;
using sensorlog::SessionKind;

enum class SessionState {
    Registered,
    PreExamPending,
    Approaching,
    ReadyToStart,
    Countdown,
    Hunting,
    Verified,
    SurveyPending,
    Completed,
};

inline std::string to_string(SessionState s) {
    switch (s) {
        case SessionState::Registered: return "Registered";
        case SessionState::PreExamPending: return "PreExamPending";
        case SessionState::Approaching: return "Approaching";
        case SessionState::ReadyToStart: return "ReadyToStart";
        case SessionState::Countdown: return "Countdown";
        case SessionState::Hunting: return "Hunting";
        case SessionState::Verified: return "Verified";
        case SessionState::SurveyPending: return "SurveyPending";
        case SessionState::Completed: return "Completed";
    }
    return "?";
}

enum class EventKind { position, countdown_tick, beacon, survey, exam_selected };

struct Event {
    Millis t_ms = 0;
    EventKind kind = EventKind::position;
    // position
    double lat = 0, lon = 0;
    // beacon
    BeaconId beacon;
    double rssi_dbm = 0;
    // survey
    std::array<int, 5> survey{};
    // exam_selected
    SessionKind session_kind = SessionKind::routine;
};

// Haversine distance in meters (Earth radius 6371.0088 km).
inline double distance(double lat1, double lon1, double lat2, double lon2) {
    return geo::distance_m(lat1, lon1, lat2, lon2);
}

struct SessionConfig {
    double start_gate_m = 15.0;   // "Start Exam" appears within this radius
    int countdown_ticks = 3;      // ticks before hunting starts
    double beacon_rssi_threshold_dbm = -70.0;
    int dwell_s = 3;
    int points_per_hunt = 1;
    // session_kind -> AED id; unset kinds use the registry defaults
    // (first AED practiced, second AED novel for post-exam II).
    std::optional<std::string> pre_exam_aed, post_exam_1_aed, post_exam_2_aed, routine_aed;
};

struct StepResult {
    bool accepted = false;
    SessionState state = SessionState::Registered;
    std::string reason; // set when rejected
};

class SessionMachine {
public:
    SessionMachine(const Registry& registry, SessionConfig cfg = {})
        : registry_(registry), cfg_(std::move(cfg)) {
        if (cfg_.start_gate_m <= 0) throw ValidationError("start gate must be positive");
        if (cfg_.countdown_ticks < 0) throw ValidationError("countdown ticks must be >= 0");
    }

    SessionState state() const { return state_; }
    int points() const { return points_; }
    Millis elapsed_ms() const { return elapsed_ms_; }
    double survival_display() const { return survival_display_; }
    bool exam_done(SessionKind k) const {
        switch (k) {
            case SessionKind::pre_exam: return pre_done_;
            case SessionKind::post_exam_1: return post1_done_;
            case SessionKind::post_exam_2: return post2_done_;
            default: return false;
        }
    }

    StepResult step(const Event& ev) {
        switch (ev.kind) {
            case EventKind::exam_selected: return on_select(ev);
            case EventKind::position: return on_position(ev);
            case EventKind::countdown_tick: return on_tick(ev);
            case EventKind::beacon: return on_beacon(ev);
            case EventKind::survey: return on_survey(ev);
        }
        return reject("unknown event");
    }

    json record() const {
        json j{{"state", to_string(state_)},
               {"points", points_},
               {"elapsed_ms", elapsed_ms_},
               {"exams_completed",
                {{"pre", pre_done_}, {"post1", post1_done_}, {"post2", post2_done_}}},
               {"hunts_completed", hunts_}};
        if (active_kind_) j["session_kind"] = sensorlog::to_string(*active_kind_);
        if (!target_aed_.empty()) j["target_aed"] = target_aed_;
        if (survey_) {
            j["survey"] = {{"q1", survey_->q1},
                           {"q2", survey_->q2},
                           {"q3", survey_->q3},
                           {"q4", survey_->q4},
                           {"q5", survey_->q5}};
        }
        return j;
    }

private:
    StepResult accept() { return {true, state_, {}}; }
    StepResult reject(std::string why) { return {false, state_, std::move(why)}; }

    std::string default_target(SessionKind k) const {
        const auto pick = [&](const std::optional<std::string>& override_id,
                              std::size_t fallback_index) -> std::string {
            if (override_id) return *override_id;
            if (registry_.aeds.empty()) return {};
            const std::size_t i = std::min(fallback_index, registry_.aeds.size() - 1);
            return registry_.aeds[i].id;
        };
        switch (k) {
            case SessionKind::pre_exam: return pick(cfg_.pre_exam_aed, 0);
            case SessionKind::post_exam_1: return pick(cfg_.post_exam_1_aed, 0);
            case SessionKind::post_exam_2: return pick(cfg_.post_exam_2_aed, 1); // novel AED
            case SessionKind::routine: return pick(cfg_.routine_aed, 0);
        }
        return {};
    }

    StepResult on_select(const Event& ev) {
        if (state_ != SessionState::Registered && state_ != SessionState::Completed)
            return reject("a session is already in progress");
        const SessionKind kind = ev.session_kind;
        if (kind != SessionKind::pre_exam && !pre_done_)
            return reject("pre-exam must be completed first");
        if (kind == SessionKind::pre_exam && pre_done_)
            return reject("pre-exam already completed");
        if (kind == SessionKind::post_exam_1 && post1_done_)
            return reject("post-exam I already completed");
        if (kind == SessionKind::post_exam_2 && post2_done_)
            return reject("post-exam II already completed");

        target_aed_ = default_target(kind);
        if (target_aed_.empty()) return reject("registry has no AED to target");
        const auto* aed = registry_.find_aed(target_aed_);
        if (aed == nullptr) return reject("configured target AED '" + target_aed_ + "' not in registry");
        target_beacon_ = aed->beacon_id;

        active_kind_ = kind;
        survey_.reset();
        verified_ = false;
        elapsed_ms_ = 0;
        survival_display_ = metrics::survival_rate(0.0);
        dwell_run_ = 0;
        prev_bucket_.reset();
        ticks_left_ = cfg_.countdown_ticks;

        if (kind == SessionKind::routine) {
            // start-anywhere: straight to the countdown
            if (ticks_left_ == 0) begin_hunt(ev.t_ms);
            else state_ = SessionState::Countdown;
        } else {
            start_point_ = exam_start_point(*aed);
            state_ = SessionState::PreExamPending;
        }
        return accept();
    }

    geo::LatLon exam_start_point(const sensorlog::AedRecord& aed) const {
        if (registry_.exam_start) return *registry_.exam_start;
        const auto* b = registry_.find_building(aed.building_id);
        return b != nullptr ? b->entry_point : geo::LatLon{aed.lat, aed.lon};
    }

    StepResult on_position(const Event& ev) {
        switch (state_) {
            case SessionState::PreExamPending:
            case SessionState::Approaching:
            case SessionState::ReadyToStart: {
                const double d = distance(ev.lat, ev.lon, start_point_.lat, start_point_.lon);
                state_ = d <= cfg_.start_gate_m ? SessionState::ReadyToStart
                                                : SessionState::Approaching;
                return accept();
            }
            case SessionState::Hunting:
                update_hunt_clock(ev.t_ms);
                return accept();
            case SessionState::Verified:
                state_ = SessionState::SurveyPending;
                return accept();
            default:
                return reject("position update not expected in state " + to_string(state_));
        }
    }

    StepResult on_tick(const Event& ev) {
        switch (state_) {
            case SessionState::ReadyToStart:
                // This tick both starts and counts toward the countdown.
                ticks_left_ = cfg_.countdown_ticks - 1;
                if (ticks_left_ <= 0) begin_hunt(ev.t_ms);
                else state_ = SessionState::Countdown;
                return accept();
            case SessionState::Countdown:
                if (--ticks_left_ <= 0) begin_hunt(ev.t_ms);
                return accept();
            case SessionState::Hunting:
                update_hunt_clock(ev.t_ms);
                return accept();
            case SessionState::Verified:
                state_ = SessionState::SurveyPending;
                return accept();
            default:
                return reject("countdown tick not expected in state " + to_string(state_));
        }
    }

    void begin_hunt(Millis t_ms) {
        state_ = SessionState::Hunting;
        hunt_start_ms_ = t_ms;
        elapsed_ms_ = 0;
        survival_display_ = metrics::survival_rate(0.0);
        dwell_run_ = 0;
        prev_bucket_.reset();
    }

    void update_hunt_clock(Millis t_ms) {
        elapsed_ms_ = std::max<Millis>(0, t_ms - hunt_start_ms_);
        survival_display_ = metrics::survival_rate(static_cast<double>(elapsed_ms_) / 1000.0);
    }

    StepResult on_beacon(const Event& ev) {
        if (state_ == SessionState::Verified) {
            state_ = SessionState::SurveyPending;
            return accept();
        }
        if (state_ != SessionState::Hunting)
            return reject("beacon sighting not expected in state " + to_string(state_));
        update_hunt_clock(ev.t_ms);
        if (ev.beacon == target_beacon_ && ev.rssi_dbm >= cfg_.beacon_rssi_threshold_dbm) {
            const Millis bucket = ev.t_ms >= 0 ? ev.t_ms / 1000 : (ev.t_ms - 999) / 1000;
            if (!prev_bucket_ || bucket != *prev_bucket_) {
                dwell_run_ = (prev_bucket_ && bucket == *prev_bucket_ + 1) ? dwell_run_ + 1 : 1;
                prev_bucket_ = bucket;
            }
            if (dwell_run_ >= cfg_.dwell_s) {
                state_ = SessionState::Verified;
                verified_ = true;
                ++hunts_;
                points_ += cfg_.points_per_hunt;
            }
        } else if (prev_bucket_) {
            const Millis bucket = ev.t_ms >= 0 ? ev.t_ms / 1000 : (ev.t_ms - 999) / 1000;
            if (bucket > *prev_bucket_ + 1) {
                dwell_run_ = 0;
                prev_bucket_.reset();
            }
        }
        return accept();
    }

    StepResult on_survey(const Event& ev) {
        if (state_ != SessionState::Verified && state_ != SessionState::SurveyPending)
            return reject("survey not expected in state " + to_string(state_));
        if (!verified_) return reject("survey before verification");
        try {
            survey_ = sensorlog::validate_survey("", ev.survey);
        } catch (const ValidationError& e) {
            return reject(e.what());
        }
        state_ = SessionState::Completed;
        if (active_kind_ == SessionKind::pre_exam) pre_done_ = true;
        if (active_kind_ == SessionKind::post_exam_1) post1_done_ = true;
        if (active_kind_ == SessionKind::post_exam_2) post2_done_ = true;
        return accept();
    }

    const Registry& registry_;
    SessionConfig cfg_;

    SessionState state_ = SessionState::Registered;
    std::optional<SessionKind> active_kind_;
    std::string target_aed_;
    BeaconId target_beacon_;
    geo::LatLon start_point_;
    int ticks_left_ = 0;
    Millis hunt_start_ms_ = 0;
    Millis elapsed_ms_ = 0;
    double survival_display_ = 0.0;
    int dwell_run_ = 0;
    std::optional<Millis> prev_bucket_;
    bool verified_ = false;
    std::optional<sensorlog::SurveyResponse> survey_;
    int points_ = 0;
    int hunts_ = 0;
    bool pre_done_ = false, post1_done_ = false, post2_done_ = false;
};

// --- event-log replay ---------------------------------------------------------

inline Event event_from_json(const json& j) {
    Event ev;
    ev.t_ms = j.at("t_ms").get<Millis>();
    const std::string type = j.at("type").get<std::string>();
    if (type == "position") {
        ev.kind = EventKind::position;
        ev.lat = j.at("lat").get<double>();
        ev.lon = j.at("lon").get<double>();
    } else if (type == "countdown_tick") {
        ev.kind = EventKind::countdown_tick;
    } else if (type == "beacon") {
        ev.kind = EventKind::beacon;
        ev.beacon = {j.at("uuid").get<std::string>(), j.at("major").get<int>(),
                     j.at("minor").get<int>()};
        ev.rssi_dbm = j.at("rssi_dbm").get<double>();
    } else if (type == "survey") {
        ev.kind = EventKind::survey;
        ev.survey = {j.at("q1").get<int>(), j.at("q2").get<int>(), j.at("q3").get<int>(),
                     j.at("q4").get<int>(), j.at("q5").get<int>()};
    } else if (type == "exam_selected") {
        ev.kind = EventKind::exam_selected;
        ev.session_kind = sensorlog::session_kind_from_string(j.at("kind").get<std::string>());
    } else {
        throw ValidationError("unknown event type '" + type + "'");
    }
    return ev;
}

struct ReplayResult {
    std::vector<SessionState> trajectory; // state after each event
    std::vector<std::string> rejections;  // "<index>: <reason>"
    json record;
};

inline ReplayResult replay(const std::vector<Event>& events, const Registry& registry,
                           const SessionConfig& cfg = {}) {
    SessionMachine machine(registry, cfg);
    ReplayResult out;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const StepResult r = machine.step(events[i]);
        out.trajectory.push_back(r.state);
        if (!r.accepted) out.rejections.push_back(std::to_string(i) + ": " + r.reason);
    }
    out.record = machine.record();
    out.record["rejections"] = out.rejections;
    return out;
}

} // namespace aedkit::session
