#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "vrw/rng.hpp"
#include "vrw/stats.hpp"
#include "vrw/timeline.hpp"

using namespace vrw;

TEST_CASE("the clock construction is bit-exact deterministic in the seed", "[timeline]") {
    WeightFunction wf = parse_weight_spec("linear:1,1");
    auto run = [&] {
        FixedRandomness xi(1234);
        return timeline_run(wf, xi, InitialConfig{}, Boundary::free_line(), 5000);
    };
    TimelineRunResult a = run();
    TimelineRunResult b = run();
    REQUIRE(a.path == b.path);
    CHECK(a.sim_time == b.sim_time);
    CHECK(a.ties == b.ties);

    FixedRandomness other(1235);
    TimelineRunResult c = timeline_run(wf, other, InitialConfig{}, Boundary::free_line(), 5000);
    CHECK(a.path != c.path);
}

TEST_CASE("race-induced paths follow the exact walk law", "[timeline]") {
    WeightFunction wf = parse_weight_spec("linear:1,1");
    const int depth = 4;
    auto expected = oracles::walk_path_law(wf, depth);
    std::vector<std::uint64_t> observed(std::size_t(1) << depth, 0);
    const int reps = 100000;
    for (int i = 0; i < reps; ++i) {
        FixedRandomness xi(std::uint64_t(i) * 2654435761ULL + 1);
        auto res = timeline_run(wf, xi, InitialConfig{}, Boundary::free_line(), depth);
        std::size_t path = 0;
        for (int k = 0; k < depth; ++k)
            if (res.path[std::size_t(k) + 1] > res.path[std::size_t(k)])
                path |= std::size_t(1) << k;
        ++observed[path];
    }
    auto chi = path_law_chisq(observed, expected);
    CHECK(chi.p_value > 1.0e-3);
}

TEST_CASE("clock time is conserved along a long run", "[timeline]") {
    WeightFunction wf = parse_weight_spec("nlogn:1");
    FixedRandomness xi(777);
    auto res = timeline_run(wf, xi, InitialConfig{}, Boundary::free_line(), 100000,
                            /*record_path=*/false);
    CHECK(res.conservation_residual < 1e-9);
}

TEST_CASE("exact clock ties are detected and broken to the right", "[timeline]") {
    WeightFunction wf = parse_weight_spec("const:1");
    FixedRandomness xi = FixedRandomness::constant(1.0);
    TimelineState s(wf, xi, InitialConfig{}, Boundary::free_line());
    int dir = s.step();
    CHECK(dir == +1);
    CHECK(s.pos() == 1);
    CHECK(s.tie_count() == 1);
}

TEST_CASE("reflecting edges never fire outward", "[timeline]") {
    WeightFunction wf = parse_weight_spec("linear:1,1");
    Boundary bd = Boundary::reflect(0, 4);
    InitialConfig config;
    config.origin = 2;
    FixedRandomness xi = with_boundary(FixedRandomness(31), bd);
    TimelineState s(wf, xi, config, bd);
    for (int i = 0; i < 20000; ++i) s.step();
    CHECK(s.jumps(0, -1) == 0);
    CHECK(s.jumps(4, +1) == 0);
    CHECK(s.z(-1) == 0);
    CHECK(s.z(5) == 0);
    CHECK(s.pos() >= 0);
    CHECK(s.pos() <= 4);
}

TEST_CASE("reflected race paths match the interior decision law", "[timeline]") {
    // on [0,2] from origin 1, only every other step is a real race; compare
    // the three interior decisions of a six-step run against the urn oracle,
    // whose two colors play the roles of the two edge local times
    WeightFunction wf = parse_weight_spec("linear:1,1");
    Boundary bd = Boundary::reflect(0, 2);
    InitialConfig config;
    config.origin = 1;
    const int decisions = 3;
    auto expected = oracles::urn_path_law(wf, decisions);
    std::vector<std::uint64_t> observed(std::size_t(1) << decisions, 0);
    const int reps = 100000;
    for (int i = 0; i < reps; ++i) {
        FixedRandomness xi = with_boundary(FixedRandomness(std::uint64_t(i) + 17), bd);
        auto res = timeline_run(wf, xi, config, bd, 2 * decisions);
        std::size_t path = 0;
        for (int k = 0; k < decisions; ++k)
            if (res.path[std::size_t(2 * k) + 1] == 2) path |= std::size_t(1) << k;
        ++observed[path];
    }
    auto chi = path_law_chisq(observed, expected);
    CHECK(chi.p_value > 1.0e-3);
}

TEST_CASE("inbound partial sums telescope on the timeline too", "[timeline]") {
    WCache cache(parse_weight_spec("linear:1,1"));
    FixedRandomness xi(91);
    TimelineState s(cache.weight(), xi, InitialConfig{}, Boundary::free_line());
    for (int i = 0; i < 50000; ++i) s.step();
    double worst = 0.0;
    for (long x = -300; x <= 300; ++x) {
        double lhs = s.y_pm(x - 1, +1) + s.y_pm(x + 1, -1);
        std::uint64_t z0 = (x == 0) ? 1 : 0;
        double rhs = cache.big_w(double(s.z(x))) - cache.big_w(double(z0));
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("the shared-clock family couples monotonically in u", "[timeline]") {
    WeightFunction wf = parse_weight_spec("linear:1,1");
    std::uint64_t violations = 0, compared = 0;
    int usable = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        auto vs = couple_family(wf, 0, {0.25, 1.0, 4.0}, seed, 2000);
        for (const auto& v : vs) {
            if (v.tie_invalidated) continue;
            violations += v.total();
            compared += v.compared;
            ++usable;
        }
    }
    REQUIRE(usable > 0);
    CHECK(compared > 0);
    CHECK(violations == 0);
}

TEST_CASE("nested reflecting intervals couple monotonically", "[timeline]") {
    WeightFunction wf = parse_weight_spec("linear:1,1");
    std::uint64_t violations = 0, compared = 0;
    int usable = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        auto v = couple_restriction(wf, 0, 3, 6, seed, 2000);
        if (v.tie_invalidated) continue;
        violations += v.total();
        compared += v.compared;
        ++usable;
    }
    REQUIRE(usable > 0);
    CHECK(compared > 0);
    CHECK(violations == 0);
}

TEST_CASE("coupling preconditions are validated", "[timeline]") {
    WeightFunction wf = parse_weight_spec("linear:1,1");
    CHECK_THROWS_AS(couple_family(wf, 0, {2.0, 1.0}, 1, 100), ConfigError);
    CHECK_THROWS_AS(couple_family(parse_weight_spec("poly:-1,1"), 0, {1.0, 2.0}, 1, 100),
                    ConfigError);
    CHECK_THROWS_AS(couple_restriction(wf, 0, 5, 3, 1, 100), ConfigError);
}
