// aedkit command-line front end. Flags override values from --config (JSON).

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aedkit/cli.hpp"

namespace {

using aedkit::cli::RunConfig;

// --config is resolved before CLI11 parses so explicit flags win.
std::string find_config_arg(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) return argv[i + 1];
        if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
    }
    return {};
}

void add_common(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--config", "JSON config file (flags override it)");
    cmd->add_option("--out", cfg.out_dir, "output directory");
    cmd->add_option("--seed", cfg.seed, "master seed");
    cmd->add_flag("--strict", cfg.strict, "escalate warnings to exit code 2");
}

void add_thresholds(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--beacon-rssi", cfg.beacon_rssi_threshold, "beacon RSSI threshold (dBm)");
    cmd->add_option("--dwell", cfg.dwell_s, "beacon dwell (s)");
    cmd->add_option("--wifi-rssi", cfg.wifi_rssi_threshold, "wifi RSSI threshold (dBm)");
    cmd->add_option("--confirm", cfg.confirm_s, "wifi confirmation (s)");
}

} // namespace

int main(int argc, char** argv) {
    RunConfig cfg;
    const std::string config_path = find_config_arg(argc, argv);
    if (!config_path.empty()) {
        try {
            cfg.merge_json(nlohmann::json::parse(aedkit::read_text_file(config_path)));
        } catch (const std::exception& e) {
            std::cerr << "error: bad config file: " << e.what() << '\n';
            return 1;
        }
    }

    CLI::App app{"AED retrieval analytics toolkit"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "generate synthetic labeled trips");
    add_common(sim, cfg);
    add_thresholds(sim, cfg);
    sim->add_option("--cohort", cfg.cohort, "pre/post exam pairs to generate");
    sim->add_option("--factor", cfg.factor, "post-exam improvement factor (0,1]");
    sim->add_option("--trips", cfg.trips, "standalone labeled trips to generate");

    auto* train = app.add_subcommand("train", "train the pausing classifier");
    add_common(train, cfg);
    train->add_option("--data", cfg.data_dir, "trips directory")->required();
    train->add_option("--registry", cfg.registry, "registry JSON");
    train->add_option("--model", cfg.model, "model output path (default <out>/model.json)");
    train->add_option("--C", cfg.svm_c, "SVM C");
    train->add_option("--gamma", cfg.svm_gamma, "RBF gamma (0 = scale default)");
    train->add_option("--smote-k", cfg.smote_k, "SMOTE neighbour count");
    train->add_option("--train-frac", cfg.train_frac, "training fraction of the stratified split");
    train->add_option("--timestamp", cfg.timestamp_ms, "timestamp recorded in model metadata");

    auto* eval = app.add_subcommand("evaluate", "evaluate a model on labeled trips");
    add_common(eval, cfg);
    eval->add_option("--data", cfg.data_dir, "trips directory")->required();
    eval->add_option("--model", cfg.model, "model JSON")->required();
    eval->add_option("--registry", cfg.registry, "registry JSON");

    auto* seg = app.add_subcommand("segment", "segment trips into retrieval phases");
    add_common(seg, cfg);
    add_thresholds(seg, cfg);
    seg->add_option("--data", cfg.data_dir, "trips directory")->required();
    seg->add_option("--registry", cfg.registry, "registry JSON")->required();
    seg->add_option("--model", cfg.model, "pausing model JSON")->required();

    auto* met = app.add_subcommand("metrics", "pair pre/post exams into outcomes");
    add_common(met, cfg);
    met->add_option("--segments", cfg.segments, "segments.csv from `segment`")->required();

    auto* st = app.add_subcommand("stats", "statistical report (JSON + CSV tables)");
    add_common(st, cfg);
    st->add_option("--segments", cfg.segments, "segments.csv");
    st->add_option("--outcomes", cfg.outcomes, "outcomes.csv");
    st->add_option("--surveys", cfg.surveys, "visit surveys CSV");
    st->add_option("--sus", cfg.sus, "SUS responses CSV");
    st->add_option("--resamples", cfg.bootstrap_resamples, "bootstrap resamples");
    st->add_option("--level", cfg.level, "CI level");
    st->add_option("--ci-method", cfg.ci_method, "bootstrap | walsh_exact");

    auto* rep = app.add_subcommand("report", "render tables from stats outputs");
    add_common(rep, cfg);
    rep->add_option("--stats-report", cfg.stats_report, "stats_report.json to render");
    rep->add_option("--segments", cfg.segments, "segments.csv (compute directly)");
    rep->add_option("--outcomes", cfg.outcomes, "outcomes.csv (compute directly)");
    rep->add_option("--surveys", cfg.surveys, "visit surveys CSV");
    rep->add_option("--sus", cfg.sus, "SUS responses CSV");
    rep->add_option("--resamples", cfg.bootstrap_resamples, "bootstrap resamples");
    rep->add_option("--ci-method", cfg.ci_method, "bootstrap | walsh_exact");
    rep->add_option("--format", cfg.format, "txt | csv");

    auto* replay = app.add_subcommand("session-replay", "replay a session event log");
    add_common(replay, cfg);
    add_thresholds(replay, cfg);
    replay->add_option("--events", cfg.events, "event log (JSON lines)")->required();
    replay->add_option("--registry", cfg.registry, "registry JSON")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return aedkit::cli::cmd_simulate(cfg);
        if (train->parsed()) return aedkit::cli::cmd_train(cfg);
        if (eval->parsed()) return aedkit::cli::cmd_evaluate(cfg);
        if (seg->parsed()) return aedkit::cli::cmd_segment(cfg);
        if (met->parsed()) return aedkit::cli::cmd_metrics(cfg);
        if (st->parsed()) return aedkit::cli::cmd_stats(cfg);
        if (rep->parsed()) return aedkit::cli::cmd_report(cfg);
        if (replay->parsed()) return aedkit::cli::cmd_session_replay(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
