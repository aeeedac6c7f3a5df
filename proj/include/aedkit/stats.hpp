#pragma once

// Nonparametric test suite: paired Wilcoxon signed-rank, Mann-Whitney U,
// Holm step-down adjustment, Hodges-Lehmann estimation with bootstrap or
// signed-rank-inversion CIs, type-7 quantiles, and SUS scoring.
//
// Exact p-values are computed from the full permutation distribution
// (equivalently, enumeration of all sign assignments / group labelings),
// realized as a subset-sum count over doubled midranks so ties are handled.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aedkit/common.hpp"
#include "aedkit/rng.hpp"

namespace aedkit::stats {

enum class Tail { less, greater, two_sided };
enum class Method { exact, normal_approx };

inline std::string to_string(Tail t) {
    switch (t) {
        case Tail::less: return "less";
        case Tail::greater: return "greater";
        case Tail::two_sided: return "two_sided";
    }
    return "?";
}

struct TestResult {
    double statistic = 0.0;
    double p = 1.0;
    std::optional<double> p_adjusted;
    Tail tail = Tail::two_sided;
    Method method = Method::exact;
    int n_effective = 0;
};

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace detail {

// Midranks of v (ascending), ties averaged. Doubling a midrank always gives
// an integer, which is what the exact-distribution DP indexes on.
inline std::vector<double> midranks(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double mid = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
        i = j + 1;
    }
    return ranks;
}

// Tie-group sizes of an ascending-sortable value set.
inline std::vector<std::size_t> tie_groups(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::vector<std::size_t> out;
    std::size_t i = 0;
    while (i < v.size()) {
        std::size_t j = i;
        while (j + 1 < v.size() && v[j + 1] == v[i]) ++j;
        out.push_back(j - i + 1);
        i = j + 1;
    }
    return out;
}

// counts[s] = number of subsets of `weights` summing to s (all 2^n subsets).
// Counts stay below 2^53 for n <= 25, so doubles hold them exactly.
inline std::vector<double> subset_sum_counts(const std::vector<int>& weights) {
    int total = 0;
    for (int w : weights) total += w;
    std::vector<double> counts(static_cast<std::size_t>(total) + 1, 0.0);
    counts[0] = 1.0;
    int reached = 0;
    for (int w : weights) {
        reached += w;
        for (int s = reached; s >= w; --s) counts[static_cast<std::size_t>(s)] += counts[static_cast<std::size_t>(s - w)];
    }
    return counts;
}

inline double tail_p(const std::vector<double>& counts, double total, int observed, Tail tail) {
    double below = 0.0, above = 0.0;
    for (int s = 0; s < static_cast<int>(counts.size()); ++s) {
        if (s <= observed) below += counts[static_cast<std::size_t>(s)];
        if (s >= observed) above += counts[static_cast<std::size_t>(s)];
    }
    switch (tail) {
        case Tail::less: return below / total;
        case Tail::greater: return above / total;
        case Tail::two_sided: return std::min(1.0, 2.0 * std::min(below, above) / total);
    }
    return 1.0;
}

inline double approx_p(double z_num, double sd, Tail tail) {
    if (sd <= 0.0) return 1.0;
    // z_num is (statistic - mean); continuity correction of 0.5 per side.
    switch (tail) {
        case Tail::less: return normal_cdf((z_num + 0.5) / sd);
        case Tail::greater: return normal_cdf(-(z_num - 0.5) / sd);
        case Tail::two_sided: {
            const double lo = normal_cdf((z_num + 0.5) / sd);
            const double hi = normal_cdf(-(z_num - 0.5) / sd);
            return std::min(1.0, 2.0 * std::min(lo, hi));
        }
    }
    return 1.0;
}

// Exact null distribution of the signed-rank statistic for untied ranks
// 1..n, used by the Walsh-inversion CI.
inline std::vector<double> signed_rank_null_counts(int n) {
    std::vector<int> weights;
    weights.reserve(static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i) weights.push_back(i);
    return subset_sum_counts(weights);
}

} // namespace detail

struct WilcoxonOptions {
    int exact_max_n = 25; // exact enumeration cutoff
};

// One-sample / paired signed-rank test on differences. Zeros are dropped;
// ties in |d| are midranked. The statistic is W+, the rank sum of positive
// differences. Exact p enumerates all 2^n sign assignments; beyond the
// cutoff a normal approximation with tie and continuity correction is used.
inline TestResult wilcoxon_signed_rank(std::span<const double> diffs, Tail tail,
                                       const WilcoxonOptions& opts = {}) {
    std::vector<double> d;
    for (double x : diffs)
        if (x != 0.0) d.push_back(x);
    if (d.empty()) throw ValidationError("wilcoxon: all differences are zero");
    const int n = static_cast<int>(d.size());

    std::vector<double> absd(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) absd[i] = std::abs(d[i]);
    const std::vector<double> ranks = detail::midranks(absd);

    double w_plus = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i)
        if (d[i] > 0.0) w_plus += ranks[i];

    TestResult res;
    res.statistic = w_plus;
    res.tail = tail;
    res.n_effective = n;

    if (n <= opts.exact_max_n) {
        std::vector<int> weights(d.size());
        for (std::size_t i = 0; i < d.size(); ++i)
            weights[i] = static_cast<int>(std::llround(2.0 * ranks[i]));
        const auto counts = detail::subset_sum_counts(weights);
        const double total = std::ldexp(1.0, n); // 2^n
        const int observed = static_cast<int>(std::llround(2.0 * w_plus));
        res.p = detail::tail_p(counts, total, observed, tail);
        res.method = Method::exact;
    } else {
        const double nn = n;
        const double mean = nn * (nn + 1.0) / 4.0;
        double tie_term = 0.0;
        for (std::size_t t : detail::tie_groups(absd)) {
            const double td = static_cast<double>(t);
            tie_term += td * td * td - td;
        }
        const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
        res.p = detail::approx_p(w_plus - mean, std::sqrt(std::max(0.0, var)), tail);
        res.method = Method::normal_approx;
    }
    return res;
}

struct MannWhitneyOptions {
    int exact_max_min = 8;   // exact while min(n,m) <= this
    int exact_max_total = 16; // ... and n+m <= this
};

// Two-sample Mann-Whitney U with midrank ties. Statistic is U of group a.
// Exact p enumerates all C(n+m, n) group labelings via a subset-sum count;
// otherwise normal approximation with tie and continuity correction.
inline TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b, Tail tail,
                                 const MannWhitneyOptions& opts = {}) {
    if (a.empty() || b.empty()) throw ValidationError("mann_whitney: empty group");
    const int n = static_cast<int>(a.size());
    const int m = static_cast<int>(b.size());
    std::vector<double> combined(a.begin(), a.end());
    combined.insert(combined.end(), b.begin(), b.end());
    const std::vector<double> ranks = detail::midranks(combined);

    double rank_sum_a = 0.0;
    for (int i = 0; i < n; ++i) rank_sum_a += ranks[static_cast<std::size_t>(i)];
    const double u_a = rank_sum_a - static_cast<double>(n) * (n + 1) / 2.0;

    TestResult res;
    res.statistic = u_a;
    res.tail = tail;
    res.n_effective = n + m;

    if (std::min(n, m) <= opts.exact_max_min && n + m <= opts.exact_max_total) {
        // Count n-subsets of the doubled ranks by their sum.
        std::vector<int> weights(combined.size());
        for (std::size_t i = 0; i < combined.size(); ++i)
            weights[i] = static_cast<int>(std::llround(2.0 * ranks[i]));
        int total_weight = 0;
        for (int w : weights) total_weight += w;
        // ways[k][s] = #k-subsets with doubled-rank sum s
        std::vector<std::vector<double>> ways(
            static_cast<std::size_t>(n) + 1,
            std::vector<double>(static_cast<std::size_t>(total_weight) + 1, 0.0));
        ways[0][0] = 1.0;
        for (int w : weights) {
            for (int k = n; k >= 1; --k) {
                auto& dst = ways[static_cast<std::size_t>(k)];
                const auto& src = ways[static_cast<std::size_t>(k - 1)];
                for (int s = total_weight; s >= w; --s)
                    dst[static_cast<std::size_t>(s)] += src[static_cast<std::size_t>(s - w)];
            }
        }
        const auto& dist = ways[static_cast<std::size_t>(n)];
        double total = 0.0;
        for (double c : dist) total += c;
        const int observed = static_cast<int>(std::llround(2.0 * rank_sum_a));
        res.p = detail::tail_p(dist, total, observed, tail);
        res.method = Method::exact;
    } else {
        const double N = n + m;
        const double mean = static_cast<double>(n) * m / 2.0;
        double tie_term = 0.0;
        for (std::size_t t : detail::tie_groups(combined)) {
            const double td = static_cast<double>(t);
            tie_term += td * td * td - td;
        }
        const double var =
            (static_cast<double>(n) * m / 12.0) * ((N + 1.0) - tie_term / (N * (N - 1.0)));
        res.p = detail::approx_p(u_a - mean, std::sqrt(std::max(0.0, var)), tail);
        res.method = Method::normal_approx;
    }
    return res;
}

// Holm step-down adjustment, returned in the input order.
// adjusted_(i) = max_{j<=i} min(1, (m-j+1) * p_(j)) over ascending p_(j).
inline std::vector<double> holm_adjust(std::span<const double> p_values) {
    const std::size_t m = p_values.size();
    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) {
        if (p_values[i] < 0.0 || p_values[i] > 1.0)
            throw ValidationError("holm: p-value outside [0,1]");
        order[i] = i;
    }
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
    std::vector<double> adjusted(m, 0.0);
    double running = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const double scaled = std::min(1.0, static_cast<double>(m - j) * p_values[order[j]]);
        running = std::max(running, scaled);
        adjusted[order[j]] = running;
    }
    return adjusted;
}

enum class CiMethod { walsh_exact, bootstrap_percentile };
enum class PointMethod { walsh_median, literal_median };

struct EstimateWithCI {
    double hl = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double level = 0.95;
    CiMethod method = CiMethod::bootstrap_percentile;
};

struct HlOptions {
    CiMethod ci = CiMethod::bootstrap_percentile;
    PointMethod point = PointMethod::walsh_median; // literal_median is a cross-check mode
    double level = 0.95;
    int resamples = 10000;
    std::uint64_t seed = 20250101;
};

// Type-7 quantile (linear interpolation) of an ascending-sorted vector.
inline double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw ValidationError("quantile of empty input");
    if (sorted.size() == 1) return sorted[0];
    const double h = q * (static_cast<double>(sorted.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

struct MedianIqr {
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
};

inline MedianIqr median_iqr(std::span<const double> values) {
    if (values.empty()) throw ValidationError("median_iqr of empty input");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    return {quantile_sorted(v, 0.5), quantile_sorted(v, 0.25), quantile_sorted(v, 0.75)};
}

namespace detail {

inline std::vector<double> walsh_averages(std::span<const double> diffs) {
    std::vector<double> w;
    w.reserve(diffs.size() * (diffs.size() + 1) / 2);
    for (std::size_t i = 0; i < diffs.size(); ++i)
        for (std::size_t j = i; j < diffs.size(); ++j) w.push_back((diffs[i] + diffs[j]) / 2.0);
    return w;
}

// Plain sample median with the exact (a+b)/2 midpoint for even sizes, so it
// is bit-identical to a brute-force median of the same values.
inline double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size();
    return m % 2 == 1 ? v[m / 2] : (v[m / 2 - 1] + v[m / 2]) / 2.0;
}

inline double hl_point(std::span<const double> diffs, PointMethod point) {
    if (point == PointMethod::literal_median)
        return median_of(std::vector<double>(diffs.begin(), diffs.end()));
    return median_of(walsh_averages(diffs));
}

} // namespace detail

// Hodges-Lehmann location estimate of paired differences: the median of all
// Walsh averages (d_i + d_j)/2, i <= j. CI either by seeded percentile
// bootstrap over participants or by inversion of the exact signed-rank
// distribution over the ordered Walsh averages.
inline EstimateWithCI hodges_lehmann(std::span<const double> diffs, const HlOptions& opts = {}) {
    if (diffs.empty()) throw ValidationError("hodges_lehmann: no differences");
    EstimateWithCI est;
    est.level = opts.level;
    est.method = opts.ci;
    est.hl = detail::hl_point(diffs, opts.point);

    const double alpha = 1.0 - opts.level;
    if (opts.ci == CiMethod::bootstrap_percentile) {
        const std::size_t n = diffs.size();
        std::vector<double> boot(static_cast<std::size_t>(opts.resamples));
        std::vector<double> resample(n);
        Rng master(opts.seed);
        for (int r = 0; r < opts.resamples; ++r) {
            // Per-resample child streams keep results order-independent.
            Rng rng = master.child(static_cast<std::uint64_t>(r) + 1);
            for (std::size_t i = 0; i < n; ++i) resample[i] = diffs[rng.below(n)];
            boot[static_cast<std::size_t>(r)] = detail::hl_point(resample, opts.point);
        }
        std::sort(boot.begin(), boot.end());
        est.ci_low = quantile_sorted(boot, alpha / 2.0);
        est.ci_high = quantile_sorted(boot, 1.0 - alpha / 2.0);
    } else {
        std::vector<double> walsh = detail::walsh_averages(diffs);
        std::sort(walsh.begin(), walsh.end());
        const int n = static_cast<int>(diffs.size());
        const auto counts = detail::signed_rank_null_counts(n);
        const double total = std::ldexp(1.0, n);
        // Largest k with P(W+ <= k) <= alpha/2; CI = [walsh[k], walsh[M-1-k]]
        // (0-based). If no such k, the CI is the full Walsh range.
        int k = -1;
        double cum = 0.0;
        for (int s = 0; s < static_cast<int>(counts.size()); ++s) {
            cum += counts[static_cast<std::size_t>(s)];
            if (cum / total <= alpha / 2.0) k = s;
            else break;
        }
        if (k < 0) {
            est.ci_low = walsh.front();
            est.ci_high = walsh.back();
        } else {
            est.ci_low = walsh[static_cast<std::size_t>(k)];
            est.ci_high = walsh[walsh.size() - 1 - static_cast<std::size_t>(k)];
        }
    }
    // The interval always brackets the point estimate.
    est.ci_low = std::min(est.ci_low, est.hl);
    est.ci_high = std::max(est.ci_high, est.hl);
    return est;
}

// --- System Usability Scale --------------------------------------------------

struct SusResult {
    std::vector<double> scores; // per respondent, 0..100
    double mean = 0.0;
    double sd = 0.0; // sample standard deviation
};

// Standard SUS: odd items contribute (v-1), even items (5-v), sum * 2.5.
inline SusResult sus_score(std::span<const std::array<int, 10>> responses) {
    if (responses.empty()) throw ValidationError("sus_score: no responses");
    SusResult out;
    for (const auto& r : responses) {
        double sum = 0.0;
        for (int i = 0; i < 10; ++i) {
            if (r[static_cast<std::size_t>(i)] < 1 || r[static_cast<std::size_t>(i)] > 5)
                throw ValidationError("sus item " + std::to_string(i + 1) + " outside 1-5");
            const int v = r[static_cast<std::size_t>(i)];
            sum += (i % 2 == 0) ? (v - 1) : (5 - v); // i even <=> odd-numbered item
        }
        out.scores.push_back(sum * 2.5);
    }
    for (double s : out.scores) out.mean += s;
    out.mean /= static_cast<double>(out.scores.size());
    if (out.scores.size() > 1) {
        double acc = 0.0;
        for (double s : out.scores) acc += (s - out.mean) * (s - out.mean);
        out.sd = std::sqrt(acc / (static_cast<double>(out.scores.size()) - 1.0));
    }
    return out;
}

// Star codes used in report tables: * p<0.05, ** p<0.01, *** p<0.001.
inline std::string significance_stars(double p) {
    if (p < 0.001) return "***";
    if (p < 0.01) return "**";
    if (p < 0.05) return "*";
    return "";
}

} // namespace aedkit::stats
