#pragma once

// Builds the statistical report for a batch of segmented trips and renders
// it as aligned text tables or CSV. Sections mirror the study's reporting
// structure: pre/post exam comparisons (totals and per phase), the pause
// test, relative-reduction descriptives, between-group comparisons, in-app
// survey shifts, and SUS.
//
// Adjustment policy: the pooled total is the primary, unadjusted test; the
// two group totals form one Holm family; each group's three phase rows form
// their own family; survey questions are Holm-adjusted per group.

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "aedkit/common.hpp"
#include "aedkit/metrics.hpp"
#include "aedkit/stats.hpp"
#include "aedkit/tripseg.hpp"

namespace aedkit::report {

using metrics::ParticipantOutcome;
using nlohmann::json;
using tripseg::TripSummary;

struct StatOptions {
    double level = 0.95;
    int bootstrap_resamples = 10000;
    std::uint64_t seed = 20250101;
    stats::CiMethod ci_method = stats::CiMethod::bootstrap_percentile;
};

struct ExamPair {
    TripSummary pre;
    TripSummary post;
};

// Complete pre-exam + post-exam-I per participant; duplicates resolve to
// the lowest trip_id (same rule as metrics::pair_outcomes).
inline std::vector<ExamPair> exam_pairs(std::span<const TripSummary> trips) {
    std::map<std::string, ExamPair> slots;
    std::map<std::string, std::pair<bool, bool>> have;
    for (const auto& t : trips) {
        if (!t.complete) continue;
        if (t.session_kind == sensorlog::SessionKind::pre_exam) {
            auto& s = slots[t.participant_id];
            if (!have[t.participant_id].first || t.trip_id < s.pre.trip_id) s.pre = t;
            have[t.participant_id].first = true;
        } else if (t.session_kind == sensorlog::SessionKind::post_exam_1) {
            auto& s = slots[t.participant_id];
            if (!have[t.participant_id].second || t.trip_id < s.post.trip_id) s.post = t;
            have[t.participant_id].second = true;
        }
    }
    std::vector<ExamPair> out;
    for (auto& [pid, s] : slots)
        if (have[pid].first && have[pid].second) out.push_back(s);
    return out;
}

namespace detail {

inline json miqr_json(const stats::MedianIqr& m) {
    return json{{"median", m.median}, {"q1", m.q1}, {"q3", m.q3}};
}

struct PairedMeasure {
    std::string group;
    std::string scope;
    std::string family; // "" = primary, unadjusted
    std::vector<double> pre, post;
};

inline json paired_row(const PairedMeasure& m, stats::Tail tail, const StatOptions& opt,
                       std::uint64_t seed_offset) {
    std::vector<double> diffs(m.pre.size());
    for (std::size_t i = 0; i < m.pre.size(); ++i) diffs[i] = m.post[i] - m.pre[i];

    json row{{"group", m.group},
             {"scope", m.scope},
             {"family", m.family},
             {"n", m.pre.size()},
             {"pre", miqr_json(stats::median_iqr(m.pre))},
             {"post", miqr_json(stats::median_iqr(m.post))}};

    stats::HlOptions hl_opts;
    hl_opts.ci = opt.ci_method;
    hl_opts.level = opt.level;
    hl_opts.resamples = opt.bootstrap_resamples;
    hl_opts.seed = opt.seed + seed_offset;
    const auto hl = stats::hodges_lehmann(diffs, hl_opts);
    row["hl"] = hl.hl;
    row["ci_low"] = hl.ci_low;
    row["ci_high"] = hl.ci_high;

    bool all_zero = true;
    for (double d : diffs)
        if (d != 0.0) all_zero = false;
    if (all_zero) {
        // No signal either way; the test is undefined, report p = 1.
        row["p"] = 1.0;
        row["method"] = "degenerate";
    } else {
        const auto t = stats::wilcoxon_signed_rank(diffs, tail);
        row["p"] = t.p;
        row["statistic"] = t.statistic;
        row["method"] = t.method == stats::Method::exact ? "exact" : "normal_approx";
    }
    return row;
}

// Holm-adjust rows sharing a named family; primary rows keep p_adj = null.
inline void apply_holm(json& rows) {
    std::map<std::string, std::vector<std::size_t>> families;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::string fam = rows[i].value("family", "");
        if (!fam.empty()) families[fam].push_back(i);
    }
    for (auto& [fam, idx] : families) {
        std::vector<double> ps;
        ps.reserve(idx.size());
        for (std::size_t i : idx) ps.push_back(rows[i].at("p").get<double>());
        const auto adj = stats::holm_adjust(ps);
        for (std::size_t k = 0; k < idx.size(); ++k) rows[idx[k]]["p_adj"] = adj[k];
    }
}

} // namespace detail

// --- exam section (Table-1 shape) ---------------------------------------------

inline json exam_stats(std::span<const TripSummary> trips, const StatOptions& opt = {}) {
    const auto pairs = exam_pairs(trips);
    if (pairs.empty()) throw ValidationError("no complete pre/post exam pairs");

    struct GroupSel {
        const char* name;
        std::optional<sensorlog::Guidance> g;
    };
    const GroupSel groups[] = {{"All", std::nullopt},
                               {"Map", sensorlog::Guidance::map},
                               {"No-Map", sensorlog::Guidance::no_map}};
    struct Measure {
        const char* scope;
        double (TripSummary::*field);
    };
    const Measure totals{("Total"), &TripSummary::d_t_s};
    const Measure phases[] = {{"Preparation", &TripSummary::prep_s},
                              {"Building Search", &TripSummary::building_s},
                              {"Indoor AED Search", &TripSummary::indoor_s}};

    json rows = json::array();
    std::uint64_t offset = 0;
    auto add = [&](const GroupSel& gs, const Measure& ms, const std::string& family) {
        detail::PairedMeasure m;
        m.group = gs.name;
        m.scope = ms.scope;
        m.family = family;
        for (const auto& p : pairs) {
            if (gs.g && p.pre.guidance != *gs.g) continue;
            m.pre.push_back(p.pre.*(ms.field));
            m.post.push_back(p.post.*(ms.field));
        }
        if (m.pre.empty()) return;
        rows.push_back(detail::paired_row(m, stats::Tail::less, opt, ++offset));
    };

    add(groups[0], totals, "");             // primary, unadjusted
    add(groups[1], totals, "group-totals");
    add(groups[2], totals, "group-totals");
    for (const auto& gs : groups) {
        const std::string family = std::string(gs.name) + "-phases";
        for (const auto& ms : phases) add(gs, ms, family);
    }
    detail::apply_holm(rows);
    return json{{"rows", rows}};
}

// One-tailed test of the pause-duration learning signal (absolute D_P).
inline json pause_stats(std::span<const TripSummary> trips, const StatOptions& opt = {}) {
    const auto pairs = exam_pairs(trips);
    if (pairs.empty()) throw ValidationError("no complete pre/post exam pairs");
    detail::PairedMeasure m;
    m.group = "All";
    m.scope = "Pause duration";
    for (const auto& p : pairs) {
        m.pre.push_back(p.pre.d_p_s);
        m.post.push_back(p.post.d_p_s);
    }
    json rows = json::array();
    rows.push_back(detail::paired_row(m, stats::Tail::less, opt, 9001));
    return json{{"rows", rows}};
}

// --- relative reductions (Table-2 shape) ---------------------------------------

inline json delta_stats(std::span<const ParticipantOutcome> outcomes) {
    if (outcomes.empty()) throw ValidationError("no participant outcomes");
    struct GroupSel {
        const char* name;
        std::optional<sensorlog::Guidance> g;
    };
    const GroupSel groups[] = {{"All", std::nullopt},
                               {"Map", sensorlog::Guidance::map},
                               {"No-Map", sensorlog::Guidance::no_map}};
    json rows = json::array();
    for (const auto& gs : groups) {
        std::vector<double> deltas;
        int improved = 0, worsened = 0;
        for (const auto& o : outcomes) {
            if (gs.g && o.group != *gs.g) continue;
            deltas.push_back(o.delta_d_t);
            if (o.delta_d_t > 0) ++improved;
            if (o.delta_d_t < 0) ++worsened;
        }
        if (deltas.empty()) continue;
        const auto mi = stats::median_iqr(deltas);
        rows.push_back(json{{"group", gs.name},
                            {"n", deltas.size()},
                            {"median", mi.median},
                            {"q1", mi.q1},
                            {"q3", mi.q3},
                            {"improved", improved},
                            {"worsened", worsened}});
    }
    json out{{"rows", rows}};
    std::vector<double> dps;
    for (const auto& o : outcomes)
        if (o.delta_d_p) dps.push_back(*o.delta_d_p);
    if (!dps.empty()) {
        const auto mi = stats::median_iqr(dps);
        out["delta_d_p"] =
            json{{"n", dps.size()}, {"median", mi.median}, {"q1", mi.q1}, {"q3", mi.q3}};
    }
    return out;
}

// --- between-group comparison (Mann-Whitney U) ---------------------------------

inline json between_group_stats(std::span<const ParticipantOutcome> outcomes) {
    std::vector<double> map_change, nomap_change;
    for (const auto& o : outcomes) {
        const double change = o.d_t_post - o.d_t_pre;
        (o.group == sensorlog::Guidance::map ? map_change : nomap_change).push_back(change);
    }
    json rows = json::array();
    if (!map_change.empty() && !nomap_change.empty()) {
        const auto t = stats::mann_whitney_u(map_change, nomap_change, stats::Tail::two_sided);
        const double med_map = stats::median_iqr(map_change).median;
        const double med_nomap = stats::median_iqr(nomap_change).median;
        rows.push_back(json{{"measure", "D_T change (post-pre)"},
                            {"n_map", map_change.size()},
                            {"n_no_map", nomap_change.size()},
                            {"statistic", t.statistic},
                            {"p", t.p},
                            {"method", t.method == stats::Method::exact ? "exact" : "normal_approx"},
                            {"median_diff_map_minus_no_map", med_map - med_nomap}});
    }
    return json{{"rows", rows}};
}

// --- in-app survey (Table-4 shape) ---------------------------------------------

struct VisitSurveyRow {
    std::string participant_id;
    int visit = 1; // 1 or 2
    std::array<int, 5> q{};
    sensorlog::Guidance guidance = sensorlog::Guidance::no_map;
};

inline std::string visit_surveys_csv_header() {
    return "participant_id,guidance,visit,q1,q2,q3,q4,q5";
}

inline std::vector<VisitSurveyRow> visit_surveys_from_csv(const std::filesystem::path& path) {
    csv::Reader r(path, visit_surveys_csv_header());
    std::vector<VisitSurveyRow> out;
    std::vector<std::string_view> f;
    while (r.next_row(f)) {
        if (f.size() != 8) throw ParseError(r.file(), r.line_number(), "expected 8 fields");
        VisitSurveyRow row;
        row.participant_id = std::string(f[0]);
        row.guidance = sensorlog::guidance_from_string(std::string(f[1]));
        row.visit = static_cast<int>(csv::parse_i64(f[2], r.file(), r.line_number()));
        for (int q = 0; q < 5; ++q)
            row.q[static_cast<std::size_t>(q)] =
                static_cast<int>(csv::parse_i64(f[3 + static_cast<std::size_t>(q)], r.file(), r.line_number()));
        sensorlog::validate_survey(row.participant_id, row.q); // range check
        out.push_back(std::move(row));
    }
    return out;
}

inline json survey_stats(std::span<const VisitSurveyRow> rows, const StatOptions& opt = {}) {
    struct PerParticipant {
        std::optional<std::array<int, 5>> first, second;
        sensorlog::Guidance g = sensorlog::Guidance::no_map;
    };
    std::map<std::string, PerParticipant> by_pid;
    for (const auto& r : rows) {
        auto& p = by_pid[r.participant_id];
        p.g = r.guidance;
        if (r.visit == 1) p.first = r.q;
        else if (r.visit == 2) p.second = r.q;
        else throw ValidationError("survey visit must be 1 or 2");
    }

    struct GroupSel {
        const char* name;
        std::optional<sensorlog::Guidance> g;
    };
    const GroupSel groups[] = {{"All", std::nullopt},
                               {"Map", sensorlog::Guidance::map},
                               {"No-Map", sensorlog::Guidance::no_map}};
    json out_rows = json::array();
    std::uint64_t offset = 5000;
    for (const auto& gs : groups) {
        for (int q = 0; q < 5; ++q) {
            detail::PairedMeasure m;
            m.group = gs.name;
            m.scope = "Q" + std::to_string(q + 1);
            m.family = std::string(gs.name) + "-survey";
            for (const auto& [pid, p] : by_pid) {
                if (!p.first || !p.second) continue;
                if (gs.g && p.g != *gs.g) continue;
                m.pre.push_back((*p.first)[static_cast<std::size_t>(q)]);
                m.post.push_back((*p.second)[static_cast<std::size_t>(q)]);
            }
            if (m.pre.empty()) continue;
            // Second visit expected higher: one-tailed greater.
            out_rows.push_back(detail::paired_row(m, stats::Tail::greater, opt, ++offset));
        }
    }
    detail::apply_holm(out_rows);
    return json{{"rows", out_rows}};
}

// --- SUS ------------------------------------------------------------------------

inline std::string sus_csv_header() {
    return "participant_id,i1,i2,i3,i4,i5,i6,i7,i8,i9,i10";
}

inline json sus_stats(const std::filesystem::path& path) {
    csv::Reader r(path, sus_csv_header());
    std::vector<std::array<int, 10>> responses;
    std::vector<std::string_view> f;
    while (r.next_row(f)) {
        if (f.size() != 11) throw ParseError(r.file(), r.line_number(), "expected 11 fields");
        std::array<int, 10> items{};
        for (int i = 0; i < 10; ++i)
            items[static_cast<std::size_t>(i)] =
                static_cast<int>(csv::parse_i64(f[1 + static_cast<std::size_t>(i)], r.file(), r.line_number()));
        responses.push_back(items);
    }
    const auto res = stats::sus_score(responses);
    return json{{"n", res.scores.size()}, {"mean", res.mean}, {"sd", res.sd}, {"scores", res.scores}};
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fixed1(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    return buf;
}

inline std::string fixed(double v, int decimals) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

inline std::string miqr_text(const json& m, int decimals) {
    return fixed(m.at("median").get<double>(), decimals) + " (" +
           fixed(m.at("q1").get<double>(), decimals) + ", " + fixed(m.at("q3").get<double>(), decimals) +
           ")";
}

inline std::string p_text(const json& row) {
    const double p = row.contains("p_adj") ? row.at("p_adj").get<double>() : row.at("p").get<double>();
    const std::string stars = stats::significance_stars(p);
    return stars.empty() ? fixed(p, 3) : stars;
}

inline std::string pad(const std::string& s, std::size_t w) {
    return s.size() >= w ? s : s + std::string(w - s.size(), ' ');
}

inline void render_table(std::ostringstream& out, const std::vector<std::vector<std::string>>& cells) {
    std::vector<std::size_t> width;
    for (const auto& row : cells)
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (width.size() <= c) width.resize(c + 1, 0);
            width[c] = std::max(width[c], row[c].size());
        }
    for (std::size_t r = 0; r < cells.size(); ++r) {
        std::string line;
        for (std::size_t c = 0; c < cells[r].size(); ++c) {
            line += pad(cells[r][c], width[c]);
            if (c + 1 < cells[r].size()) line += "  ";
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out << line << '\n';
        if (r == 0) out << std::string(std::min<std::size_t>(line.size(), 100), '-') << '\n';
    }
}

inline void render_paired_section(std::ostringstream& out, const json& section, int decimals) {
    std::vector<std::vector<std::string>> cells;
    cells.push_back({"Group", "Scope / Phase", "Pre Median (IQR)", "Post Median (IQR)",
                     "Reduction (HL)", "95% CI", "Adj. p"});
    for (const auto& row : section.at("rows")) {
        cells.push_back({row.at("group").get<std::string>(), row.at("scope").get<std::string>(),
                         miqr_text(row.at("pre"), decimals), miqr_text(row.at("post"), decimals),
                         fixed(row.at("hl").get<double>(), decimals),
                         "[" + fixed(row.at("ci_low").get<double>(), decimals) + ", " +
                             fixed(row.at("ci_high").get<double>(), decimals) + "]",
                         p_text(row) + (row.contains("p_adj") ? "" : " (unadj.)")});
    }
    render_table(out, cells);
}

} // namespace detail

// Assembled report document: any of the sections may be absent.
inline std::string render_text(const json& report) {
    std::ostringstream out;
    out << "Significance: * p<0.05, ** p<0.01, *** p<0.001 (adjusted unless marked)\n";
    if (report.contains("exam")) {
        out << "\n== Exam retrieval times (one-tailed Wilcoxon, post < pre) ==\n";
        detail::render_paired_section(out, report.at("exam"), 1);
    }
    if (report.contains("pause")) {
        out << "\n== Pause-duration learning signal (one-tailed Wilcoxon, post < pre) ==\n";
        detail::render_paired_section(out, report.at("pause"), 1);
    }
    if (report.contains("delta")) {
        out << "\n== Relative retrieval-duration reduction (delta D_T) ==\n";
        std::vector<std::vector<std::string>> cells;
        cells.push_back({"Group", "N", "Median dDT (IQR)", "Improved n/N (%)", "Worsened n/N (%)"});
        for (const auto& row : report.at("delta").at("rows")) {
            const auto n = row.at("n").get<std::size_t>();
            const auto imp = row.at("improved").get<int>();
            const auto wor = row.at("worsened").get<int>();
            auto frac = [&](int k) {
                return std::to_string(k) + "/" + std::to_string(n) + " (" +
                       detail::fixed(100.0 * k / static_cast<double>(n), 1) + "%)";
            };
            cells.push_back({row.at("group").get<std::string>(), std::to_string(n),
                             detail::fixed(row.at("median").get<double>(), 2) + " (" +
                                 detail::fixed(row.at("q1").get<double>(), 2) + "-" +
                                 detail::fixed(row.at("q3").get<double>(), 2) + ")",
                             frac(imp), frac(wor)});
        }
        detail::render_table(out, cells);
        if (report.at("delta").contains("delta_d_p")) {
            const auto& dp = report.at("delta").at("delta_d_p");
            out << "delta D_P median (IQR): " << detail::fixed(dp.at("median").get<double>(), 2)
                << " (" << detail::fixed(dp.at("q1").get<double>(), 2) << ", "
                << detail::fixed(dp.at("q3").get<double>(), 2) << "), n=" << dp.at("n").get<int>()
                << '\n';
        }
    }
    if (report.contains("between_group")) {
        out << "\n== Between-group comparison (two-tailed Mann-Whitney U) ==\n";
        std::vector<std::vector<std::string>> cells;
        cells.push_back({"Measure", "U", "p", "Median diff (Map - No-Map)"});
        for (const auto& row : report.at("between_group").at("rows")) {
            cells.push_back({row.at("measure").get<std::string>(),
                             detail::fixed(row.at("statistic").get<double>(), 1),
                             detail::fixed(row.at("p").get<double>(), 3),
                             detail::fixed(row.at("median_diff_map_minus_no_map").get<double>(), 1)});
        }
        detail::render_table(out, cells);
    }
    if (report.contains("survey")) {
        out << "\n== In-app survey, first vs second visit (one-tailed Wilcoxon, second > first) ==\n";
        detail::render_paired_section(out, report.at("survey"), 1);
    }
    if (report.contains("sus")) {
        const auto& s = report.at("sus");
        out << "\n== System Usability Scale ==\n"
            << "SUS: " << detail::fixed(s.at("mean").get<double>(), 1) << " +/- "
            << detail::fixed(s.at("sd").get<double>(), 1) << " out of 100 (n=" << s.at("n").get<int>()
            << ")\n";
    }
    return out.str();
}

// CSV export: every paired section flattens to the same column set.
inline std::string render_section_csv(const json& section) {
    csv::Writer w("group,scope,n,pre_median,pre_q1,pre_q3,post_median,post_q1,post_q3,hl,ci_low,"
                  "ci_high,p,p_adj,stars,method");
    for (const auto& row : section.at("rows")) {
        const double shown_p =
            row.contains("p_adj") ? row.at("p_adj").get<double>() : row.at("p").get<double>();
        w.field(row.at("group").get<std::string>())
            .field(row.at("scope").get<std::string>())
            .field(static_cast<std::int64_t>(row.at("n").get<std::size_t>()))
            .field(row.at("pre").at("median").get<double>())
            .field(row.at("pre").at("q1").get<double>())
            .field(row.at("pre").at("q3").get<double>())
            .field(row.at("post").at("median").get<double>())
            .field(row.at("post").at("q1").get<double>())
            .field(row.at("post").at("q3").get<double>())
            .field(row.at("hl").get<double>())
            .field(row.at("ci_low").get<double>())
            .field(row.at("ci_high").get<double>())
            .field(row.at("p").get<double>())
            .field(row.contains("p_adj") ? csv::format_double(row.at("p_adj").get<double>())
                                         : std::string{})
            .field(stats::significance_stars(shown_p))
            .field(row.value("method", ""));
        w.end_row();
    }
    return w.str();
}

inline std::string render_delta_csv(const json& delta) {
    csv::Writer w("group,n,median,q1,q3,improved,worsened");
    for (const auto& row : delta.at("rows")) {
        w.field(row.at("group").get<std::string>())
            .field(static_cast<std::int64_t>(row.at("n").get<std::size_t>()))
            .field(row.at("median").get<double>())
            .field(row.at("q1").get<double>())
            .field(row.at("q3").get<double>())
            .field(row.at("improved").get<int>())
            .field(row.at("worsened").get<int>());
        w.end_row();
    }
    return w.str();
}

} // namespace aedkit::report
