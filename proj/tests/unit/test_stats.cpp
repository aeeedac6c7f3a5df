#include <catch_amalgamated.hpp>

#include <array>
#include <cmath>

#include "aedkit/rng.hpp"
#include "aedkit/stats.hpp"
#include "oracles.hpp"

using namespace aedkit;
using namespace aedkit::stats;

TEST_CASE("wilcoxon: frozen exact cases") {
    SECTION("all-positive (1,2,3), greater") {
        const std::array d{1.0, 2.0, 3.0};
        const auto r = wilcoxon_signed_rank(d, Tail::greater);
        CHECK(r.method == Method::exact);
        CHECK(r.statistic == Catch::Approx(6.0));
        CHECK(r.p == Catch::Approx(0.125).epsilon(1e-12)); // 1/8
    }
    SECTION("all-negative (-1,-2,-3), less") {
        const std::array d{-1.0, -2.0, -3.0};
        const auto r = wilcoxon_signed_rank(d, Tail::less);
        CHECK(r.p == Catch::Approx(0.125).epsilon(1e-12));
    }
    SECTION("tied magnitudes (5,-5), two-sided") {
        const std::array d{5.0, -5.0};
        const auto r = wilcoxon_signed_rank(d, Tail::two_sided);
        CHECK(r.p == Catch::Approx(1.0));
    }
    SECTION("zeros are dropped") {
        const std::array d{0.0, 0.0, 1.0, 2.0, 3.0};
        const auto r = wilcoxon_signed_rank(d, Tail::greater);
        CHECK(r.n_effective == 3);
        CHECK(r.p == Catch::Approx(0.125).epsilon(1e-12));
    }
    SECTION("all zeros is an error") {
        const std::array d{0.0, 0.0};
        CHECK_THROWS_AS(wilcoxon_signed_rank(d, Tail::less), ValidationError);
    }
}

TEST_CASE("wilcoxon: exact equals literal 2^n enumeration (seeded fuzz, n<=12)") {
    Rng rng(2024);
    for (int trial = 0; trial < 250; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(12));
        std::vector<double> d;
        for (int i = 0; i < n; ++i) {
            // small integer grid provokes plenty of ties
            double v = static_cast<double>(rng.range(-4, 4));
            if (v == 0.0) v = 1.0;
            d.push_back(v);
        }
        const auto counts = oracles::wilcoxon_sign_enumeration(d);
        const auto less = wilcoxon_signed_rank(d, Tail::less);
        const auto greater = wilcoxon_signed_rank(d, Tail::greater);
        const auto both = wilcoxon_signed_rank(d, Tail::two_sided);
        REQUIRE(less.method == Method::exact);
        CHECK(less.p == Catch::Approx(counts.le / counts.total).margin(1e-12));
        CHECK(greater.p == Catch::Approx(counts.ge / counts.total).margin(1e-12));
        CHECK(both.p == Catch::Approx(oracles::two_sided(counts)).margin(1e-12));
    }
}

TEST_CASE("wilcoxon: normal approximation beyond the cutoff") {
    Rng rng(5);
    std::vector<double> d;
    for (int i = 0; i < 40; ++i) d.push_back(rng.normal(0.4, 1.0));
    const auto r = wilcoxon_signed_rank(d, Tail::greater);
    CHECK(r.method == Method::normal_approx);
    CHECK(r.p > 0.0);
    CHECK(r.p < 1.0);
    // shifted-positive sample should look significant
    CHECK(r.p < 0.05);
}

TEST_CASE("mann-whitney: frozen exact cases") {
    SECTION("a=(1,2) b=(3,4), two-sided = 2/6") {
        const std::array a{1.0, 2.0}, b{3.0, 4.0};
        const auto r = mann_whitney_u(a, b, Tail::two_sided);
        CHECK(r.method == Method::exact);
        CHECK(r.statistic == Catch::Approx(0.0));
        CHECK(r.p == Catch::Approx(2.0 / 6.0).margin(1e-12));
    }
    SECTION("identical groups give p = 1") {
        const std::array a{1.0, 2.0, 3.0}, b{1.0, 2.0, 3.0};
        const auto r = mann_whitney_u(a, b, Tail::two_sided);
        CHECK(r.p == Catch::Approx(1.0));
    }
    SECTION("a=(1,2,3) b=(10,11,12), two-sided = 2/20") {
        const std::array a{1.0, 2.0, 3.0}, b{10.0, 11.0, 12.0};
        const auto r = mann_whitney_u(a, b, Tail::two_sided);
        CHECK(r.p == Catch::Approx(0.1).margin(1e-12));
    }
    SECTION("empty group is an error") {
        const std::array a{1.0};
        CHECK_THROWS_AS(mann_whitney_u(a, {}, Tail::two_sided), ValidationError);
    }
}

TEST_CASE("mann-whitney: exact equals literal labeling enumeration (n+m<=12)") {
    Rng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(6));
        const int m = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(12 - n)));
        std::vector<double> a, b;
        for (int i = 0; i < n; ++i) a.push_back(static_cast<double>(rng.range(0, 5)));
        for (int i = 0; i < m; ++i) b.push_back(static_cast<double>(rng.range(0, 5)));
        const auto counts = oracles::mann_whitney_enumeration(a, b);
        const auto less = mann_whitney_u(a, b, Tail::less);
        const auto greater = mann_whitney_u(a, b, Tail::greater);
        const auto both = mann_whitney_u(a, b, Tail::two_sided);
        REQUIRE(less.method == Method::exact);
        CHECK(less.p == Catch::Approx(counts.le / counts.total).margin(1e-12));
        CHECK(greater.p == Catch::Approx(counts.ge / counts.total).margin(1e-12));
        CHECK(both.p == Catch::Approx(oracles::two_sided(counts)).margin(1e-12));
    }
}

TEST_CASE("mann-whitney: switches to normal approximation on large groups") {
    Rng rng(9);
    std::vector<double> a, b;
    for (int i = 0; i < 12; ++i) a.push_back(rng.normal(0, 1));
    for (int i = 0; i < 12; ++i) b.push_back(rng.normal(0, 1));
    const auto r = mann_whitney_u(a, b, Tail::two_sided);
    CHECK(r.method == Method::normal_approx);
}

TEST_CASE("holm: hand-verified triples and properties") {
    SECTION("(0.01, 0.04, 0.03) -> (0.03, 0.06, 0.06)") {
        const auto adj = holm_adjust(std::array{0.01, 0.04, 0.03});
        CHECK(adj[0] == Catch::Approx(0.03));
        CHECK(adj[1] == Catch::Approx(0.06));
        CHECK(adj[2] == Catch::Approx(0.06));
    }
    SECTION("single p unchanged") {
        const auto adj = holm_adjust(std::array{0.2});
        CHECK(adj[0] == Catch::Approx(0.2));
    }
    SECTION("(0.5, 0.9) -> (1.0, 1.0)") {
        const auto adj = holm_adjust(std::array{0.5, 0.9});
        CHECK(adj[0] == Catch::Approx(1.0));
        CHECK(adj[1] == Catch::Approx(1.0));
    }
    SECTION("empty input is fine") { CHECK(holm_adjust({}).empty()); }
    SECTION("seeded fuzz: monotone in sorted order, capped, never below raw") {
        Rng rng(31337);
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t m = 1 + rng.below(10);
            std::vector<double> p;
            for (std::size_t i = 0; i < m; ++i) p.push_back(rng.uniform());
            const auto adj = holm_adjust(p);
            std::vector<std::size_t> order(m);
            for (std::size_t i = 0; i < m; ++i) order[i] = i;
            std::sort(order.begin(), order.end(),
                      [&](auto x, auto y) { return p[x] < p[y]; });
            for (std::size_t i = 0; i < m; ++i) {
                CHECK(adj[i] >= p[i]);
                CHECK(adj[i] <= 1.0);
                if (i > 0) CHECK(adj[order[i]] >= adj[order[i - 1]]);
            }
        }
    }
}

TEST_CASE("hodges-lehmann: point estimate") {
    SECTION("(1,2,3) -> 2.0 via Walsh set {1,1.5,2,2,2.5,3}") {
        const std::array d{1.0, 2.0, 3.0};
        const auto est = hodges_lehmann(d);
        CHECK(est.hl == Catch::Approx(2.0));
    }
    SECTION("single diff -> point and CI collapse onto it") {
        const std::array d{4.2};
        const auto est = hodges_lehmann(d);
        CHECK(est.hl == Catch::Approx(4.2));
        CHECK(est.ci_low == Catch::Approx(4.2));
        CHECK(est.ci_high == Catch::Approx(4.2));
    }
    SECTION("all-equal diffs -> that value") {
        const std::array d{3.0, 3.0, 3.0, 3.0};
        CHECK(hodges_lehmann(d).hl == Catch::Approx(3.0));
    }
    SECTION("matches brute force on seeded instances up to n = 30") {
        Rng rng(404);
        for (int trial = 0; trial < 220; ++trial) {
            const int n = 1 + static_cast<int>(rng.below(30));
            std::vector<double> d;
            for (int i = 0; i < n; ++i) d.push_back(rng.normal(0, 5));
            HlOptions opts;
            opts.resamples = 50; // point estimate is what's under test
            const auto est = hodges_lehmann(d, opts);
            CHECK(est.hl == oracles::hl_walsh_bruteforce(d));
        }
    }
}

TEST_CASE("hodges-lehmann: CIs") {
    Rng rng(11);
    std::vector<double> d;
    for (int i = 0; i < 20; ++i) d.push_back(rng.normal(-40, 15));

    SECTION("bootstrap CI is deterministic given seed and brackets the estimate") {
        HlOptions opts;
        opts.resamples = 2000;
        opts.seed = 99;
        const auto a = hodges_lehmann(d, opts);
        const auto b = hodges_lehmann(d, opts);
        CHECK(a.ci_low == b.ci_low);
        CHECK(a.ci_high == b.ci_high);
        CHECK(a.ci_low <= a.hl);
        CHECK(a.hl <= a.ci_high);
        opts.seed = 100;
        const auto c = hodges_lehmann(d, opts);
        CHECK((c.ci_low != a.ci_low || c.ci_high != a.ci_high));
    }
    SECTION("walsh-exact CI brackets the estimate and is tighter than the range") {
        HlOptions opts;
        opts.ci = CiMethod::walsh_exact;
        const auto est = hodges_lehmann(d, opts);
        CHECK(est.ci_low <= est.hl);
        CHECK(est.hl <= est.ci_high);
        std::vector<double> sorted(d.begin(), d.end());
        std::sort(sorted.begin(), sorted.end());
        CHECK(est.ci_low >= sorted.front());
        CHECK(est.ci_high <= sorted.back());
    }
    SECTION("translation equivariance of the point estimate") {
        Rng r2(5150);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<double> x;
            const int n = 2 + static_cast<int>(r2.below(12));
            for (int i = 0; i < n; ++i) x.push_back(r2.normal(0, 3));
            const double c = r2.uniform(-10, 10);
            std::vector<double> shifted;
            for (double v : x) shifted.push_back(v + c);
            HlOptions opts;
            opts.resamples = 10;
            CHECK(hodges_lehmann(shifted, opts).hl ==
                  Catch::Approx(hodges_lehmann(x, opts).hl + c).margin(1e-9));
        }
    }
}

TEST_CASE("median and IQR use the type-7 convention") {
    SECTION("(1,2,3,4)") {
        const auto m = median_iqr(std::array{1.0, 2.0, 3.0, 4.0});
        CHECK(m.median == Catch::Approx(2.5));
        CHECK(m.q1 == Catch::Approx(1.75));
        CHECK(m.q3 == Catch::Approx(3.25));
    }
    SECTION("(1,2,3)") {
        const auto m = median_iqr(std::array{1.0, 2.0, 3.0});
        CHECK(m.median == Catch::Approx(2.0));
        CHECK(m.q1 == Catch::Approx(1.5));
        CHECK(m.q3 == Catch::Approx(2.5));
    }
    SECTION("single value") {
        const auto m = median_iqr(std::array{7.5});
        CHECK(m.median == 7.5);
        CHECK(m.q1 == 7.5);
        CHECK(m.q3 == 7.5);
    }
    SECTION("empty input is an error") {
        CHECK_THROWS_AS(median_iqr({}), ValidationError);
    }
}

TEST_CASE("SUS scoring") {
    std::array<int, 10> best{5, 1, 5, 1, 5, 1, 5, 1, 5, 1};
    std::array<int, 10> worst{1, 5, 1, 5, 1, 5, 1, 5, 1, 5};
    std::array<int, 10> mid{3, 3, 3, 3, 3, 3, 3, 3, 3, 3};
    const auto r = sus_score(std::array{best, worst, mid});
    CHECK(r.scores[0] == Catch::Approx(100.0));
    CHECK(r.scores[1] == Catch::Approx(0.0));
    CHECK(r.scores[2] == Catch::Approx(50.0));
    CHECK(r.mean == Catch::Approx(50.0));
    std::array<int, 10> bad{3, 3, 0, 3, 3, 3, 3, 3, 3, 3};
    CHECK_THROWS_AS(sus_score(std::vector{bad}), ValidationError);
}

TEST_CASE("significance stars") {
    CHECK(significance_stars(0.0005) == "***");
    CHECK(significance_stars(0.005) == "**");
    CHECK(significance_stars(0.04) == "*");
    CHECK(significance_stars(0.2).empty());
}
