#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "vrw/rng.hpp"
#include "vrw/stats.hpp"
#include "vrw/walk.hpp"

using namespace vrw;

TEST_CASE("one-step probabilities respect a biased configuration", "[walk]") {
    // with z0(-1) = 2 and w(n) = n + 1: w(z(-1)) = 3, w(z(+1)) = 1
    WeightFunction wf = parse_weight_spec("linear:1,1");
    InitialConfig config;
    config.z0 = {{-1, 2}};
    Rng rng(21);
    const int reps = 100000;
    int lefts = 0;
    for (int i = 0; i < reps; ++i) {
        WalkState s(config, Boundary::free_line());
        s.step(wf, rng);
        if (s.pos() == -1) ++lefts;
    }
    auto ci = wilson_interval(std::uint64_t(lefts), reps);
    CHECK(ci.lo <= 0.75);
    CHECK(ci.hi >= 0.75);
}

TEST_CASE("depth-4 path frequencies match the exact enumeration", "[walk]") {
    WeightFunction wf = parse_weight_spec("linear:1,1");
    const int depth = 4;
    auto expected = oracles::walk_path_law(wf, depth);
    std::vector<std::uint64_t> observed(std::size_t(1) << depth, 0);
    Rng rng(31);
    const int reps = 100000;
    for (int i = 0; i < reps; ++i) {
        WalkState s(InitialConfig{}, Boundary::free_line());
        std::size_t path = 0;
        long prev = 0;
        for (int k = 0; k < depth; ++k) {
            s.step(wf, rng);
            if (s.pos() > prev) path |= std::size_t(1) << k;
            prev = s.pos();
        }
        ++observed[path];
    }
    auto chi = path_law_chisq(observed, expected);
    CHECK(chi.p_value > 1.0e-3);
}

TEST_CASE("inbound partial sums telescope to W of the local time", "[walk]") {
    // exact identity: Y+(x-1) + Y-(x+1) = W(Z_n(x)) - W(Z_0(x))
    for (const char* spec : {"linear:1,1", "nlogn:1"}) {
        WCache cache(parse_weight_spec(spec));
        WalkState s(InitialConfig{}, Boundary::free_line());
        Rng rng(41);
        for (int i = 0; i < 100000; ++i) s.step(cache.weight(), rng);
        CHECK(check_ynpm(s, cache) < 1e-9);
    }
    // also on a reflected interval, where edge jumps are deterministic
    {
        WCache cache(parse_weight_spec("linear:1,1"));
        InitialConfig config;
        config.origin = 2;
        WalkState s(config, Boundary::reflect(0, 4));
        Rng rng(43);
        for (int i = 0; i < 100000; ++i) s.step(cache.weight(), rng);
        CHECK(check_ynpm(s, cache) < 1e-9);
    }
}

TEST_CASE("the eqW combination is conserved along the run", "[walk]") {
    auto drift_of = [](const InitialConfig& config, Boundary bd, long site) {
        WCache cache(parse_weight_spec("linear:1,1"));
        WalkState s(config, bd);
        Rng rng(47);
        double first = eqw_stat(s, cache, site);
        double drift = 0.0;
        for (int i = 0; i < 50000; ++i) {
            s.step(cache.weight(), rng);
            if (i % 500 == 0)
                drift = std::max(drift, std::abs(eqw_stat(s, cache, site) - first));
        }
        return drift;
    };
    CHECK(drift_of(InitialConfig{}, Boundary::free_line(), 0) < 1e-9);
    InitialConfig biased;
    biased.z0 = {{-2, 3}, {1, 1}};
    CHECK(drift_of(biased, Boundary::free_line(), -1) < 1e-9);
    InitialConfig mid;
    mid.origin = 3;
    CHECK(drift_of(mid, Boundary::reflect(0, 6), 1) < 1e-9);
}

TEST_CASE("local times account for every step plus the time-0 visit", "[walk]") {
    WeightFunction wf = parse_weight_spec("nlogn:1");
    InitialConfig config;
    config.z0 = {{2, 5}};
    WalkState s(config, Boundary::free_line());
    Rng rng(53);
    const std::uint64_t n = 10000;
    for (std::uint64_t i = 0; i < n; ++i) s.step(wf, rng);
    std::uint64_t total = 0;
    for (long x = s.min_visited() - 2; x <= s.max_visited() + 2; ++x)
        total += s.z(x) - config.at(x);
    CHECK(total == n + 1);
    CHECK(s.z(2) >= 5);
}

TEST_CASE("a two-site box reports a two-site recent range", "[walk]") {
    WCache cache(parse_weight_spec("linear:1,1"));
    Rng rng(59);
    ReplicaResult res =
        vrrw_run(cache.weight(), cache, InitialConfig{}, Boundary::reflect(0, 1), 20000, rng);
    CHECK(res.report.range_size == 2);
    CHECK(res.report.range_lo == 0);
    CHECK(res.report.range_hi == 1);
    CHECK(res.report.is_interval);
}

TEST_CASE("run-level report carries the window interval and residuals", "[walk]") {
    WCache cache(parse_weight_spec("poly:2,1"));
    Rng rng(61);
    ReplicaResult res =
        vrrw_run(cache.weight(), cache, InitialConfig{}, Boundary::free_line(), 200000, rng);
    CHECK(res.steps == 200000);
    CHECK(res.report.range_size >= 1);
    CHECK(res.report.is_interval);
    CHECK(res.ynpm_residual < 1e-9);
    CHECK(res.eqw_drift < 1e-9);
    CHECK(res.report.window_size >= 1);
}

TEST_CASE("window fraction is validated", "[walk]") {
    WCache cache(parse_weight_spec("linear:1,1"));
    WalkState s(InitialConfig{}, Boundary::free_line());
    Rng rng(67);
    for (int i = 0; i < 100; ++i) s.step(cache.weight(), rng);
    CHECK_THROWS_AS(localization_report(s, cache, 0.0), ConfigError);
    CHECK_THROWS_AS(localization_report(s, cache, 1.5), ConfigError);
    CHECK_NOTHROW(localization_report(s, cache, 1.0));
}

TEST_CASE("span bound stops runaway excursions", "[walk]") {
    WCache cache(parse_weight_spec("const:1"));
    Rng rng(71);
    CHECK_THROWS_AS(vrrw_run(cache.weight(), cache, InitialConfig{}, Boundary::free_line(),
                             1000000, rng, 0.5, 0, /*span_bound=*/64),
                    ResourceError);
}

TEST_CASE("profile summaries expose edge and central masses", "[walk]") {
    LocalizationReport rep;
    rep.range_size = 4;
    rep.profile = {{0, 0.02, 0.0}, {1, 0.45, 0.0}, {2, 0.50, 0.0}, {3, 0.03, 0.0}};
    auto p4 = profile_summary(rep);
    REQUIRE(p4.valid);
    CHECK(p4.edge_max == 0.03);
    CHECK(p4.central_min == 0.45);

    rep.range_size = 5;
    rep.profile = {{0, 0.01, 0.0}, {1, 0.24, 0.0}, {2, 0.48, 0.0}, {3, 0.25, 0.0}, {4, 0.02, 0.0}};
    auto p5 = profile_summary(rep);
    REQUIRE(p5.valid);
    CHECK(p5.edge_max == 0.02);
    CHECK(p5.center == 0.48);
    CHECK(p5.flank_sum == Catch::Approx(0.49));
    CHECK(p5.central_min == 0.24);

    rep.range_size = 3;
    rep.profile.resize(3);
    CHECK_FALSE(profile_summary(rep).valid);
}
