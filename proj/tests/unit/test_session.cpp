#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "aedkit/session.hpp"
#include "aedkit/simtrip.hpp"

using namespace aedkit;
using namespace aedkit::session;
using sensorlog::SessionKind;

namespace {

Event select(SessionKind k, Millis t = 0) {
    Event e;
    e.t_ms = t;
    e.kind = EventKind::exam_selected;
    e.session_kind = k;
    return e;
}

Event position(double lat, double lon, Millis t) {
    Event e;
    e.t_ms = t;
    e.kind = EventKind::position;
    e.lat = lat;
    e.lon = lon;
    return e;
}

Event tick(Millis t) {
    Event e;
    e.t_ms = t;
    e.kind = EventKind::countdown_tick;
    return e;
}

Event beacon(const sensorlog::BeaconId& id, double rssi, Millis t) {
    Event e;
    e.t_ms = t;
    e.kind = EventKind::beacon;
    e.beacon = id;
    e.rssi_dbm = rssi;
    return e;
}

Event survey(std::array<int, 5> q, Millis t) {
    Event e;
    e.t_ms = t;
    e.kind = EventKind::survey;
    e.survey = q;
    return e;
}

// Runs a full pre-exam to completion and returns the machine.
void complete_pre_exam(SessionMachine& m, const sensorlog::Registry& reg) {
    const auto start = *reg.exam_start;
    REQUIRE(m.step(select(SessionKind::pre_exam, 0)).accepted);
    REQUIRE(m.step(position(start.lat, start.lon, 1000)).accepted);
    REQUIRE(m.state() == SessionState::ReadyToStart);
    for (Millis t = 2000; m.state() != SessionState::Hunting; t += 1000)
        REQUIRE(m.step(tick(t)).accepted);
    const auto& target = reg.aeds[0].beacon_id;
    Millis t = 10000;
    while (m.state() == SessionState::Hunting) {
        REQUIRE(m.step(beacon(target, -55, t)).accepted);
        t += 1000;
    }
    REQUIRE(m.state() == SessionState::Verified);
    REQUIRE(m.step(survey({2, 4, 1, 4, 4}, t)).accepted);
    REQUIRE(m.state() == SessionState::Completed);
}

} // namespace

TEST_CASE("haversine distance") {
    CHECK(distance(35.0, 135.0, 35.0, 135.0) == 0.0);
    // 0.001 degrees of latitude at the equator
    CHECK(distance(0.0, 0.0, 0.001, 0.0) == Catch::Approx(111.19).margin(0.05));
    // antipodal points: pi * R
    CHECK(distance(0.0, 0.0, 0.0, 180.0) ==
          Catch::Approx(std::numbers::pi * 6371008.8).margin(1.0));
    CHECK_THROWS_AS(distance(91.0, 0.0, 0.0, 0.0), ValidationError);
}

TEST_CASE("15 m gate controls ReadyToStart") {
    const auto reg = simtrip::make_campus_registry();
    SessionMachine m(reg);
    REQUIRE(m.step(select(SessionKind::pre_exam, 0)).accepted);
    const auto start = *reg.exam_start;

    // 20 m away: still approaching
    const auto p20 = geo::offset_m(start, 20.0, 0.0);
    REQUIRE(m.step(position(p20.lat, p20.lon, 1000)).accepted);
    CHECK(m.state() == SessionState::Approaching);

    // 14.9 m: gate opens
    const auto p149 = geo::offset_m(start, 14.9, 0.0);
    REQUIRE(m.step(position(p149.lat, p149.lon, 2000)).accepted);
    CHECK(m.state() == SessionState::ReadyToStart);

    // moving away closes it again
    REQUIRE(m.step(position(p20.lat, p20.lon, 3000)).accepted);
    CHECK(m.state() == SessionState::Approaching);
}

TEST_CASE("property: ReadyToStart reachable iff distance <= 15 m") {
    const auto reg = simtrip::make_campus_registry();
    const auto start = *reg.exam_start;
    Rng rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        SessionMachine m(reg);
        REQUIRE(m.step(select(SessionKind::pre_exam, 0)).accepted);
        const double bearing = rng.uniform(0, 2 * std::numbers::pi);
        const double dist = rng.uniform(0.0, 60.0);
        const auto p = geo::offset_m(start, dist * std::cos(bearing), dist * std::sin(bearing));
        REQUIRE(m.step(position(p.lat, p.lon, 1000)).accepted);
        const double actual = distance(p.lat, p.lon, start.lat, start.lon);
        if (actual <= 15.0) CHECK(m.state() == SessionState::ReadyToStart);
        else CHECK(m.state() == SessionState::Approaching);
    }
}

TEST_CASE("routine sessions are rejected before the pre-exam") {
    const auto reg = simtrip::make_campus_registry();
    SessionMachine m(reg);
    const auto r = m.step(select(SessionKind::routine, 0));
    CHECK_FALSE(r.accepted);
    CHECK(r.reason.find("pre-exam") != std::string::npos);
    CHECK(m.state() == SessionState::Registered);
}

TEST_CASE("post exams also gate on the pre-exam") {
    const auto reg = simtrip::make_campus_registry();
    SessionMachine m(reg);
    CHECK_FALSE(m.step(select(SessionKind::post_exam_1, 0)).accepted);
    CHECK_FALSE(m.step(select(SessionKind::post_exam_2, 0)).accepted);
}

TEST_CASE("full exam flow completes and awards a point") {
    const auto reg = simtrip::make_campus_registry();
    SessionMachine m(reg);
    complete_pre_exam(m, reg);
    CHECK(m.points() == 1);
    CHECK(m.exam_done(SessionKind::pre_exam));
    CHECK(m.record().at("survey").at("q1") == 2);

    SECTION("routine session allowed afterwards; points stay monotone") {
        REQUIRE(m.step(select(SessionKind::routine, 100000)).accepted);
        CHECK(m.state() == SessionState::Countdown);
        int last_points = m.points();
        for (Millis t = 101000; m.state() != SessionState::Hunting; t += 1000)
            REQUIRE(m.step(tick(t)).accepted);
        const auto& target = reg.aeds[0].beacon_id;
        Millis t = 105000;
        while (m.state() == SessionState::Hunting) {
            REQUIRE(m.step(beacon(target, -60, t)).accepted);
            CHECK(m.points() >= last_points);
            last_points = m.points();
            t += 1000;
        }
        REQUIRE(m.step(survey({3, 4, 2, 5, 5}, t)).accepted);
        CHECK(m.state() == SessionState::Completed);
        CHECK(m.points() == 2);
    }
    SECTION("repeating the pre-exam is rejected") {
        CHECK_FALSE(m.step(select(SessionKind::pre_exam, 100000)).accepted);
    }
}

TEST_CASE("verification requires the dwell run") {
    const auto reg = simtrip::make_campus_registry();
    SessionMachine m(reg);
    const auto start = *reg.exam_start;
    REQUIRE(m.step(select(SessionKind::pre_exam, 0)).accepted);
    REQUIRE(m.step(position(start.lat, start.lon, 1000)).accepted);
    for (Millis t = 2000; m.state() != SessionState::Hunting; t += 1000)
        REQUIRE(m.step(tick(t)).accepted);
    const auto& target = reg.aeds[0].beacon_id;

    // weak sightings never verify
    for (Millis t = 10000; t < 20000; t += 1000)
        REQUIRE(m.step(beacon(target, -90, t)).accepted);
    CHECK(m.state() == SessionState::Hunting);

    // an interrupted run does not verify (gap at 22 s)
    REQUIRE(m.step(beacon(target, -55, 21000)).accepted);
    REQUIRE(m.step(beacon(target, -55, 23000)).accepted);
    CHECK(m.state() == SessionState::Hunting);

    REQUIRE(m.step(beacon(target, -55, 24000)).accepted);
    REQUIRE(m.step(beacon(target, -55, 25000)).accepted);
    CHECK(m.state() == SessionState::Verified);
    CHECK(m.elapsed_ms() > 0);
    CHECK(m.survival_display() < 92.13);
    CHECK(m.survival_display() > 0.0);
}

TEST_CASE("survey is rejected without verification and validated on submission") {
    const auto reg = simtrip::make_campus_registry();
    SessionMachine m(reg);
    REQUIRE(m.step(select(SessionKind::pre_exam, 0)).accepted);
    CHECK_FALSE(m.step(survey({2, 4, 1, 4, 4}, 1000)).accepted);

    complete_pre_exam(m, reg);
    REQUIRE(m.step(select(SessionKind::routine, 50000)).accepted);
    for (Millis t = 51000; m.state() != SessionState::Hunting; t += 1000)
        REQUIRE(m.step(tick(t)).accepted);
    Millis t = 55000;
    const auto& target = reg.aeds[0].beacon_id;
    while (m.state() == SessionState::Hunting) {
        REQUIRE(m.step(beacon(target, -55, t)).accepted);
        t += 1000;
    }
    // out-of-range q1 rejected, machine stays pending
    const auto bad = m.step(survey({5, 4, 1, 4, 4}, t));
    CHECK_FALSE(bad.accepted);
    CHECK(m.state() != SessionState::Completed);
    REQUIRE(m.step(survey({4, 4, 1, 4, 4}, t + 1000)).accepted);
    CHECK(m.state() == SessionState::Completed);
}

TEST_CASE("replaying the same event log yields the identical trajectory") {
    const auto reg = simtrip::make_campus_registry();
    const auto start = *reg.exam_start;
    std::vector<Event> events{select(SessionKind::pre_exam, 0),
                              position(start.lat, start.lon, 1000),
                              tick(2000),
                              tick(3000),
                              tick(4000),
                              beacon(reg.aeds[0].beacon_id, -55, 5000),
                              beacon(reg.aeds[0].beacon_id, -55, 6000),
                              beacon(reg.aeds[0].beacon_id, -55, 7000),
                              survey({2, 4, 1, 4, 4}, 8000),
                              select(SessionKind::routine, 9000)};
    const auto a = replay(events, reg);
    const auto b = replay(events, reg);
    CHECK(a.trajectory == b.trajectory);
    CHECK(a.record.dump() == b.record.dump());
    CHECK(a.trajectory.back() == SessionState::Countdown);
    CHECK(a.record.at("points") == 1);
}

TEST_CASE("event JSON parsing") {
    const auto e = event_from_json(nlohmann::json::parse(
        R"({"t_ms":5,"type":"beacon","uuid":"u","major":1,"minor":2,"rssi_dbm":-61.5})"));
    CHECK(e.kind == EventKind::beacon);
    CHECK(e.beacon.minor == 2);
    CHECK_THROWS_AS(event_from_json(nlohmann::json::parse(R"({"t_ms":0,"type":"warp"})")),
                    ValidationError);
}
