#pragma once

// Retrieval-efficiency metrics: the survival-rate display model, relative
// pre/post reductions, and within-participant exam pairing.

#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aedkit/common.hpp"
#include "aedkit/sensorlog.hpp"

namespace aedkit::metrics {

using sensorlog::Guidance;
using sensorlog::SessionKind;

inline constexpr double kSurvivalScale = 92.13;
inline constexpr double kSurvivalDecayPerMin = 0.147;

// Survival percentage shown during a hunt. The retrieval time is doubled to
// approximate the round trip (fetch + return) before conversion to minutes.
inline double survival_rate(double elapsed_retrieval_s) {
    if (elapsed_retrieval_s < 0.0 || !std::isfinite(elapsed_retrieval_s))
        throw ValidationError("survival_rate: negative elapsed time");
    const double minutes = 2.0 * elapsed_retrieval_s / 60.0;
    return kSurvivalScale * std::exp(-kSurvivalDecayPerMin * minutes);
}

// Relative reduction (pre - post) / pre, in (-inf, 1].
inline double delta(double pre_s, double post_s) {
    if (!(pre_s > 0.0)) throw ValidationError("delta: pre duration must be positive");
    return (pre_s - post_s) / pre_s;
}

struct ParticipantOutcome {
    std::string participant_id;
    Guidance group = Guidance::no_map;
    double d_t_pre = 0, d_t_post = 0;
    double d_p_pre = 0, d_p_post = 0;
    double delta_d_t = 0;
    std::optional<double> delta_d_p; // undefined when d_p_pre == 0
};

// One segmented trip reduced to what pairing needs.
struct TripDurations {
    std::string trip_id;
    std::string participant_id;
    SessionKind session_kind = SessionKind::routine;
    Guidance guidance = Guidance::no_map;
    bool complete = false;
    double d_t_s = 0;
    double d_p_s = 0;
};

struct PairingResult {
    std::vector<ParticipantOutcome> outcomes;
    std::vector<std::string> warnings;
};

// Pair each participant's complete pre-exam trip with their complete
// post-exam-1 trip. Participants missing either (or with incomplete exams)
// are excluded with a warning; duplicate exams use the lowest trip_id.
inline PairingResult pair_outcomes(std::span<const TripDurations> trips) {
    struct Slot {
        const TripDurations* pre = nullptr;
        const TripDurations* post = nullptr;
        bool dup = false;
    };
    std::map<std::string, Slot> by_participant;
    for (const auto& t : trips) {
        if (t.session_kind != SessionKind::pre_exam && t.session_kind != SessionKind::post_exam_1)
            continue;
        auto& slot = by_participant[t.participant_id];
        const TripDurations*& dst = t.session_kind == SessionKind::pre_exam ? slot.pre : slot.post;
        if (!t.complete) continue;
        if (dst == nullptr || t.trip_id < dst->trip_id) {
            if (dst != nullptr) slot.dup = true;
            dst = &t;
        } else {
            slot.dup = true;
        }
    }

    PairingResult res;
    for (const auto& [pid, slot] : by_participant) {
        if (slot.pre == nullptr || slot.post == nullptr) {
            res.warnings.push_back("participant " + pid +
                                   ": missing or incomplete exam trip, excluded");
            continue;
        }
        if (slot.dup)
            res.warnings.push_back("participant " + pid +
                                   ": multiple exam trips, kept lowest trip_id");
        if (!(slot.pre->d_t_s > 0.0)) {
            res.warnings.push_back("participant " + pid + ": non-positive pre-exam D_T, excluded");
            continue;
        }
        ParticipantOutcome o;
        o.participant_id = pid;
        o.group = slot.pre->guidance;
        if (slot.post->guidance != slot.pre->guidance)
            res.warnings.push_back("participant " + pid + ": guidance differs between exams");
        o.d_t_pre = slot.pre->d_t_s;
        o.d_t_post = slot.post->d_t_s;
        o.d_p_pre = slot.pre->d_p_s;
        o.d_p_post = slot.post->d_p_s;
        o.delta_d_t = delta(o.d_t_pre, o.d_t_post);
        if (o.d_p_pre > 0.0) o.delta_d_p = delta(o.d_p_pre, o.d_p_post);
        res.outcomes.push_back(std::move(o));
    }
    return res;
}

inline std::string outcomes_csv_header() {
    return "participant_id,group,D_T_pre,D_T_post,D_P_pre,D_P_post,delta_D_T,delta_D_P";
}

inline std::string outcomes_to_csv(std::span<const ParticipantOutcome> outcomes) {
    csv::Writer w(outcomes_csv_header());
    for (const auto& o : outcomes) {
        w.field(o.participant_id)
            .field(sensorlog::to_string(o.group))
            .field(o.d_t_pre)
            .field(o.d_t_post)
            .field(o.d_p_pre)
            .field(o.d_p_post)
            .field(o.delta_d_t)
            .field(o.delta_d_p ? csv::format_double(*o.delta_d_p) : std::string{});
        w.end_row();
    }
    return w.str();
}

inline std::vector<ParticipantOutcome> outcomes_from_csv(const std::filesystem::path& path) {
    csv::Reader r(path, outcomes_csv_header());
    std::vector<ParticipantOutcome> out;
    std::vector<std::string_view> f;
    while (r.next_row(f)) {
        if (f.size() != 8)
            throw ParseError(r.file(), r.line_number(), "expected 8 fields");
        ParticipantOutcome o;
        o.participant_id = std::string(f[0]);
        o.group = sensorlog::guidance_from_string(std::string(f[1]));
        o.d_t_pre = csv::parse_double(f[2], r.file(), r.line_number());
        o.d_t_post = csv::parse_double(f[3], r.file(), r.line_number());
        o.d_p_pre = csv::parse_double(f[4], r.file(), r.line_number());
        o.d_p_post = csv::parse_double(f[5], r.file(), r.line_number());
        o.delta_d_t = csv::parse_double(f[6], r.file(), r.line_number());
        if (!f[7].empty()) o.delta_d_p = csv::parse_double(f[7], r.file(), r.line_number());
        out.push_back(std::move(o));
    }
    return out;
}

} // namespace aedkit::metrics
