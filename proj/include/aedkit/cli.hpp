#pragma once

// Command implementations behind the aedkit binary. Each command is a pure
// function of its inputs, flags, and seed; outputs are written atomically
// and every run drops its resolved configuration next to the outputs.
//
// Exit codes: 0 success, 1 validation/input error, 2 warnings escalated by
// --strict.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "aedkit/common.hpp"
#include "aedkit/dsp.hpp"
#include "aedkit/metrics.hpp"
#include "aedkit/pausenet.hpp"
#include "aedkit/report.hpp"
#include "aedkit/sensorlog.hpp"
#include "aedkit/session.hpp"
#include "aedkit/simtrip.hpp"
#include "aedkit/stats.hpp"
#include "aedkit/tripseg.hpp"

namespace aedkit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

struct RunConfig {
    // paths
    std::string data_dir;
    std::string registry;
    std::string model;
    std::string out_dir = "out";
    std::string segments;  // segments.csv input
    std::string outcomes;  // outcomes.csv input
    std::string surveys;   // visit surveys input (optional)
    std::string sus;       // SUS responses input (optional)
    std::string events;    // session event log (JSON lines)
    std::string stats_report; // precomputed stats_report.json for `report`

    // detection thresholds
    double beacon_rssi_threshold = -70.0;
    int dwell_s = 3;
    double wifi_rssi_threshold = -75.0;
    int confirm_s = 3;

    // classifier hyperparameters
    double svm_c = 1.0;
    double svm_gamma = 0.0; // 0 = scale default
    int smote_k = 5;
    double train_frac = 0.7;
    std::int64_t timestamp_ms = 0; // recorded in model metadata

    // simulator
    int cohort = 0;
    double factor = 0.6;
    int trips = 0;

    // statistics
    int bootstrap_resamples = 10000;
    double level = 0.95;
    std::string ci_method = "bootstrap"; // bootstrap | walsh_exact

    std::string format = "txt"; // report output: txt | csv
    std::uint64_t seed = 7;
    bool strict = false;

    void validate() const {
        auto check_rssi = [](double v, const char* what) {
            if (v < -120.0 || v > 0.0)
                throw ValidationError(std::string(what) + " must be within [-120, 0] dBm");
        };
        check_rssi(beacon_rssi_threshold, "beacon RSSI threshold");
        check_rssi(wifi_rssi_threshold, "wifi RSSI threshold");
        if (dwell_s < 1) throw ValidationError("dwell seconds must be >= 1");
        if (confirm_s < 1) throw ValidationError("confirm seconds must be >= 1");
        if (!(train_frac > 0.0 && train_frac < 1.0))
            throw ValidationError("train fraction must be in (0,1)");
        if (!(svm_c > 0.0)) throw ValidationError("C must be positive");
        if (svm_gamma < 0.0) throw ValidationError("gamma must be positive (or 0 for scale default)");
        if (smote_k < 1) throw ValidationError("SMOTE k must be >= 1");
        if (bootstrap_resamples < 1) throw ValidationError("bootstrap resamples must be >= 1");
        if (!(level > 0.0 && level < 1.0)) throw ValidationError("confidence level must be in (0,1)");
        if (ci_method != "bootstrap" && ci_method != "walsh_exact")
            throw ValidationError("ci method must be bootstrap or walsh_exact");
        if (format != "txt" && format != "csv") throw ValidationError("format must be txt or csv");
    }

    json to_json() const {
        return json{{"data_dir", data_dir},
                    {"registry", registry},
                    {"model", model},
                    {"out_dir", out_dir},
                    {"segments", segments},
                    {"outcomes", outcomes},
                    {"surveys", surveys},
                    {"sus", sus},
                    {"events", events},
                    {"stats_report", stats_report},
                    {"beacon_rssi_threshold", beacon_rssi_threshold},
                    {"dwell_s", dwell_s},
                    {"wifi_rssi_threshold", wifi_rssi_threshold},
                    {"confirm_s", confirm_s},
                    {"svm_c", svm_c},
                    {"svm_gamma", svm_gamma},
                    {"smote_k", smote_k},
                    {"train_frac", train_frac},
                    {"timestamp_ms", timestamp_ms},
                    {"cohort", cohort},
                    {"factor", factor},
                    {"trips", trips},
                    {"bootstrap_resamples", bootstrap_resamples},
                    {"level", level},
                    {"ci_method", ci_method},
                    {"format", format},
                    {"seed", seed},
                    {"strict", strict}};
    }

    void merge_json(const json& j) {
        auto get = [&](const char* key, auto& dst) {
            if (j.contains(key)) dst = j.at(key).get<std::decay_t<decltype(dst)>>();
        };
        get("data_dir", data_dir);
        get("registry", registry);
        get("model", model);
        get("out_dir", out_dir);
        get("segments", segments);
        get("outcomes", outcomes);
        get("surveys", surveys);
        get("sus", sus);
        get("events", events);
        get("stats_report", stats_report);
        get("beacon_rssi_threshold", beacon_rssi_threshold);
        get("dwell_s", dwell_s);
        get("wifi_rssi_threshold", wifi_rssi_threshold);
        get("confirm_s", confirm_s);
        get("svm_c", svm_c);
        get("svm_gamma", svm_gamma);
        get("smote_k", smote_k);
        get("train_frac", train_frac);
        get("timestamp_ms", timestamp_ms);
        get("cohort", cohort);
        get("factor", factor);
        get("trips", trips);
        get("bootstrap_resamples", bootstrap_resamples);
        get("level", level);
        get("ci_method", ci_method);
        get("format", format);
        get("seed", seed);
        get("strict", strict);
    }
};

namespace detail {

inline void write_resolved_config(const RunConfig& cfg, const std::string& command) {
    json j = cfg.to_json();
    j["command"] = command;
    write_text_file(fs::path(cfg.out_dir) / "run_config.json", j.dump(2) + "\n");
}

inline tripseg::SegConfig seg_config(const RunConfig& cfg) {
    return {cfg.beacon_rssi_threshold, cfg.dwell_s, cfg.wifi_rssi_threshold, cfg.confirm_s};
}

inline simtrip::SimConfig sim_config(const RunConfig& cfg) {
    simtrip::SimConfig sim;
    sim.beacon_rssi_threshold = cfg.beacon_rssi_threshold;
    sim.dwell_s = cfg.dwell_s;
    sim.wifi_rssi_threshold = cfg.wifi_rssi_threshold;
    sim.confirm_s = cfg.confirm_s;
    return sim;
}

inline report::StatOptions stat_options(const RunConfig& cfg) {
    report::StatOptions opt;
    opt.level = cfg.level;
    opt.bootstrap_resamples = cfg.bootstrap_resamples;
    opt.seed = cfg.seed;
    opt.ci_method = cfg.ci_method == "walsh_exact" ? stats::CiMethod::walsh_exact
                                                   : stats::CiMethod::bootstrap_percentile;
    return opt;
}

// Sorted manifest paths: every <data_dir>/<trip>/manifest.json.
inline std::vector<fs::path> find_manifests(const fs::path& data_dir) {
    if (!fs::exists(data_dir)) throw Error("data directory not found: " + data_dir.string());
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(data_dir)) {
        if (!entry.is_directory()) continue;
        const fs::path manifest = entry.path() / "manifest.json";
        if (fs::exists(manifest)) out.push_back(manifest);
    }
    std::sort(out.begin(), out.end());
    if (out.empty()) throw Error("no trips (manifest.json) under " + data_dir.string());
    return out;
}

inline int finish(const RunConfig& cfg, const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    return (cfg.strict && !warnings.empty()) ? 2 : 0;
}

} // namespace detail

// --- simulate -----------------------------------------------------------------

inline int cmd_simulate(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.cohort == 0 && cfg.trips == 0)
        throw ValidationError("simulate: need --cohort N and/or --trips K");
    const fs::path out(cfg.out_dir);
    const fs::path trips_dir = out / "trips";
    const auto sim = detail::sim_config(cfg);

    sensorlog::Registry registry = simtrip::make_campus_registry();
    json cohort_truth;

    if (cfg.cohort > 0) {
        const auto cohort = simtrip::synthesize_cohort(cfg.cohort, cfg.factor, cfg.seed, sim);
        registry = cohort.registry;
        for (const auto& trip : cohort.trips) simtrip::write_trip(trip, trips_dir);
        json participants = json::array();
        for (const auto& t : cohort.truth) {
            json jp{{"participant_id", t.participant_id},
                    {"d_t_pre", t.d_t_pre},
                    {"d_t_post", t.d_t_post},
                    {"d_p_pre", t.d_p_pre},
                    {"d_p_post", t.d_p_post},
                    {"delta_d_t", t.delta_d_t}};
            if (t.delta_d_p) jp["delta_d_p"] = *t.delta_d_p;
            participants.push_back(std::move(jp));
        }
        cohort_truth = json{{"participants", participants},
                            {"true_median_delta_d_t", cohort.true_median_delta_d_t},
                            {"improvement_factor", cohort.improvement_factor},
                            {"seed", cohort.seed}};
        write_text_file(out / "cohort_truth.json", cohort_truth.dump(2) + "\n");
        write_text_file(out / "visit_surveys.csv",
                        simtrip::synthesize_visit_surveys_csv(cfg.cohort, cfg.seed + 101));
        write_text_file(out / "sus.csv", simtrip::synthesize_sus_csv(cfg.cohort, cfg.seed + 202));
    }
    if (cfg.trips > 0) {
        for (const auto& script : simtrip::make_training_scripts(cfg.trips, cfg.seed)) {
            const auto trip = simtrip::synthesize(script, registry, sim);
            simtrip::write_trip(trip, trips_dir);
        }
    }
    write_text_file(out / "registry.json",
                    sensorlog::registry_to_json(registry).dump(2) + "\n");
    detail::write_resolved_config(cfg, "simulate");
    std::cout << "simulate: wrote " << (2 * cfg.cohort + cfg.trips) << " trips under "
              << trips_dir.string() << '\n';
    return 0;
}

// --- shared loading -----------------------------------------------------------

namespace detail {

struct LoadedTrips {
    std::vector<sensorlog::SensorLog> logs;
    std::vector<std::string> warnings;
};

inline LoadedTrips load_all_trips(const RunConfig& cfg, const sensorlog::Registry* registry) {
    LoadedTrips out;
    const fs::path data(cfg.data_dir);
    for (const auto& manifest : find_manifests(data)) {
        auto log = sensorlog::load_trip(manifest, data, registry);
        for (const auto& w : log.warnings)
            out.warnings.push_back(log.manifest.trip_id + ": " + w);
        out.logs.push_back(std::move(log));
    }
    return out;
}

inline std::vector<dsp::FeatureWindow> labeled_windows(const sensorlog::SensorLog& log) {
    std::vector<dsp::FeatureWindow> windows = dsp::feature_windows(log.accel, log.gyro);
    dsp::attach_labels(windows, log.labels);
    std::erase_if(windows, [](const dsp::FeatureWindow& w) { return !w.label.has_value(); });
    return windows;
}

inline json eval_to_json(const pausenet::EvalMetrics& m) {
    auto cls = [](const pausenet::ClassMetrics& c) {
        return json{{"precision", c.precision},
                    {"recall", c.recall},
                    {"f1", c.f1},
                    {"support", c.support}};
    };
    return json{{"moving", cls(m.moving)},
                {"pausing", cls(m.pausing)},
                {"weighted_f1", m.weighted_f1},
                {"confusion",
                 {{"moving_as_moving", m.confusion[0][0]},
                  {"moving_as_pausing", m.confusion[0][1]},
                  {"pausing_as_moving", m.confusion[1][0]},
                  {"pausing_as_pausing", m.confusion[1][1]}}}};
}

} // namespace detail

// --- train / evaluate -----------------------------------------------------------

inline int cmd_train(const RunConfig& cfg) {
    cfg.validate();
    std::optional<sensorlog::Registry> registry;
    if (!cfg.registry.empty()) registry = sensorlog::load_registry(cfg.registry);
    auto loaded = detail::load_all_trips(cfg, registry ? &*registry : nullptr);

    std::vector<dsp::FeatureWindow> windows;
    for (const auto& log : loaded.logs) {
        auto w = detail::labeled_windows(log);
        windows.insert(windows.end(), w.begin(), w.end());
    }
    if (windows.empty()) throw ValidationError("train: no labeled windows in data set");

    auto split = pausenet::stratified_split(windows, cfg.train_frac, cfg.seed);
    auto augmented = pausenet::smote(split.train, cfg.smote_k, cfg.seed + 1);
    for (const auto& w : augmented.warnings) loaded.warnings.push_back(w);

    pausenet::TrainConfig tc;
    tc.c = cfg.svm_c;
    if (cfg.svm_gamma > 0.0) tc.gamma = cfg.svm_gamma;
    tc.seed = cfg.seed;
    tc.trained_at_ms = cfg.timestamp_ms;
    const auto model = pausenet::train(augmented.windows, tc);

    const auto metrics = pausenet::evaluate(model, split.eval);

    const fs::path out(cfg.out_dir);
    const fs::path model_path = cfg.model.empty() ? out / "model.json" : fs::path(cfg.model);
    pausenet::save_model(model, model_path);
    json summary{{"train_windows", split.train.size()},
                 {"augmented_windows", augmented.windows.size()},
                 {"eval_windows", split.eval.size()},
                 {"support_vectors", model.support_vectors.size()},
                 {"gamma", model.gamma},
                 {"C", model.c},
                 {"eval", detail::eval_to_json(metrics)}};
    write_text_file(out / "train_eval.json", summary.dump(2) + "\n");
    detail::write_resolved_config(cfg, "train");
    std::cout << "train: weighted F1 " << metrics.weighted_f1 << ", pausing F1 "
              << metrics.pausing.f1 << ", model -> " << model_path.string() << '\n';
    return detail::finish(cfg, loaded.warnings);
}

inline int cmd_evaluate(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.model.empty()) throw ValidationError("evaluate: --model required");
    const auto model = pausenet::load_model(cfg.model);
    std::optional<sensorlog::Registry> registry;
    if (!cfg.registry.empty()) registry = sensorlog::load_registry(cfg.registry);
    auto loaded = detail::load_all_trips(cfg, registry ? &*registry : nullptr);

    std::vector<dsp::FeatureWindow> windows;
    for (const auto& log : loaded.logs) {
        auto w = detail::labeled_windows(log);
        windows.insert(windows.end(), w.begin(), w.end());
    }
    if (windows.empty()) throw ValidationError("evaluate: no labeled windows in data set");
    const auto metrics = pausenet::evaluate(model, windows);
    write_text_file(fs::path(cfg.out_dir) / "eval.json",
                    detail::eval_to_json(metrics).dump(2) + "\n");
    detail::write_resolved_config(cfg, "evaluate");
    std::cout << "evaluate: weighted F1 " << metrics.weighted_f1 << ", pausing F1 "
              << metrics.pausing.f1 << '\n';
    return detail::finish(cfg, loaded.warnings);
}

// --- segment --------------------------------------------------------------------

inline int cmd_segment(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.registry.empty()) throw ValidationError("segment: --registry required");
    if (cfg.model.empty()) throw ValidationError("segment: --model required");
    const auto registry = sensorlog::load_registry(cfg.registry);
    const auto model = pausenet::load_model(cfg.model);
    auto loaded = detail::load_all_trips(cfg, &registry);

    const fs::path out(cfg.out_dir);
    std::vector<tripseg::TripSummary> summaries;
    for (const auto& log : loaded.logs) {
        const auto phases = tripseg::segment(log, registry, model, detail::seg_config(cfg));
        for (const auto& w : phases.warnings)
            loaded.warnings.push_back(log.manifest.trip_id + ": " + w);
        write_text_file(out / "segments" / (log.manifest.trip_id + ".json"),
                        tripseg::phases_to_json(phases).dump(2) + "\n");
        summaries.push_back(tripseg::summarize(log.manifest, phases));
    }
    std::sort(summaries.begin(), summaries.end(),
              [](const auto& a, const auto& b) { return a.trip_id < b.trip_id; });
    write_text_file(out / "segments.csv", tripseg::summaries_to_csv(summaries));
    detail::write_resolved_config(cfg, "segment");
    std::cout << "segment: " << summaries.size() << " trips -> "
              << (out / "segments.csv").string() << '\n';
    return detail::finish(cfg, loaded.warnings);
}

// --- metrics --------------------------------------------------------------------

inline int cmd_metrics(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.segments.empty()) throw ValidationError("metrics: --segments required");
    const auto summaries = tripseg::summaries_from_csv(cfg.segments);
    std::vector<metrics::TripDurations> durations;
    durations.reserve(summaries.size());
    for (const auto& s : summaries) durations.push_back(tripseg::to_durations(s));
    const auto paired = metrics::pair_outcomes(durations);
    if (paired.outcomes.empty()) throw ValidationError("no complete trips to pair");
    write_text_file(fs::path(cfg.out_dir) / "outcomes.csv",
                    metrics::outcomes_to_csv(paired.outcomes));
    detail::write_resolved_config(cfg, "metrics");
    std::cout << "metrics: " << paired.outcomes.size() << " participant outcomes\n";
    return detail::finish(cfg, paired.warnings);
}

// --- stats / report ---------------------------------------------------------------

namespace detail {

inline json compute_stats_report(const RunConfig& cfg) {
    json report_doc;
    const auto opt = stat_options(cfg);
    if (!cfg.segments.empty()) {
        const auto summaries = tripseg::summaries_from_csv(cfg.segments);
        report_doc["exam"] = report::exam_stats(summaries, opt);
        report_doc["pause"] = report::pause_stats(summaries, opt);
    }
    if (!cfg.outcomes.empty()) {
        const auto outcomes = metrics::outcomes_from_csv(cfg.outcomes);
        if (outcomes.empty()) throw ValidationError("no complete trips");
        report_doc["delta"] = report::delta_stats(outcomes);
        report_doc["between_group"] = report::between_group_stats(outcomes);
    }
    if (!cfg.surveys.empty()) {
        const auto rows = report::visit_surveys_from_csv(cfg.surveys);
        report_doc["survey"] = report::survey_stats(rows, opt);
    }
    if (!cfg.sus.empty()) report_doc["sus"] = report::sus_stats(cfg.sus);
    if (report_doc.empty())
        throw ValidationError("stats: nothing to do (need --segments/--outcomes/--surveys/--sus)");
    return report_doc;
}

inline void write_report_files(const RunConfig& cfg, const json& doc, bool text) {
    const fs::path out(cfg.out_dir);
    if (text) {
        write_text_file(out / "report.txt", report::render_text(doc));
    } else {
        if (doc.contains("exam"))
            write_text_file(out / "report_exam.csv", report::render_section_csv(doc.at("exam")));
        if (doc.contains("pause"))
            write_text_file(out / "report_pause.csv", report::render_section_csv(doc.at("pause")));
        if (doc.contains("survey"))
            write_text_file(out / "report_survey.csv", report::render_section_csv(doc.at("survey")));
        if (doc.contains("delta"))
            write_text_file(out / "report_delta.csv", report::render_delta_csv(doc.at("delta")));
    }
}

} // namespace detail

inline int cmd_stats(const RunConfig& cfg) {
    cfg.validate();
    const json doc = detail::compute_stats_report(cfg);
    const fs::path out(cfg.out_dir);
    write_text_file(out / "stats_report.json", doc.dump(2) + "\n");
    detail::write_report_files(cfg, doc, false); // CSV tables
    detail::write_resolved_config(cfg, "stats");
    std::cout << "stats: wrote " << (out / "stats_report.json").string() << '\n';
    return 0;
}

inline int cmd_report(const RunConfig& cfg) {
    cfg.validate();
    json doc;
    if (!cfg.stats_report.empty()) {
        try {
            doc = json::parse(read_text_file(cfg.stats_report));
        } catch (const json::exception& e) {
            throw ParseError(cfg.stats_report, 0, e.what());
        }
    } else {
        doc = detail::compute_stats_report(cfg);
    }
    detail::write_report_files(cfg, doc, cfg.format == "txt");
    detail::write_resolved_config(cfg, "report");
    if (cfg.format == "txt") std::cout << report::render_text(doc);
    return 0;
}

// --- session replay ---------------------------------------------------------------

inline int cmd_session_replay(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.events.empty()) throw ValidationError("session-replay: --events required");
    if (cfg.registry.empty()) throw ValidationError("session-replay: --registry required");
    const auto registry = sensorlog::load_registry(cfg.registry);

    std::vector<session::Event> events;
    const std::string text = read_text_file(cfg.events);
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) nl = text.size();
        std::string line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (line.empty() || line == "\r") continue;
        try {
            events.push_back(session::event_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw ParseError(cfg.events, line_no, e.what());
        }
    }

    session::SessionConfig scfg;
    scfg.beacon_rssi_threshold_dbm = cfg.beacon_rssi_threshold;
    scfg.dwell_s = cfg.dwell_s;
    const auto result = session::replay(events, registry, scfg);

    json trajectory = json::array();
    for (const auto s : result.trajectory) trajectory.push_back(session::to_string(s));
    json record = result.record;
    record["trajectory"] = trajectory;
    write_text_file(fs::path(cfg.out_dir) / "session_record.json", record.dump(2) + "\n");
    detail::write_resolved_config(cfg, "session-replay");
    std::cout << "session-replay: final state "
              << record.at("state").get<std::string>() << ", " << result.rejections.size()
              << " rejected event(s)\n";
    std::vector<std::string> warnings(result.rejections.begin(), result.rejections.end());
    return detail::finish(cfg, warnings);
}

} // namespace aedkit::cli
