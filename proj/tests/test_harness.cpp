#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "vrw/harness.hpp"

using namespace vrw;

TEST_CASE("seed derivation is frozen and collision-free", "[harness]") {
    CHECK(seed_stream(0, 0) == 16294208416658607535ULL);
    std::set<std::uint64_t> seen;
    for (std::uint64_t m : {0ULL, 1ULL, 42ULL})
        for (std::uint64_t i = 0; i < 100000; ++i) seen.insert(seed_stream(m, i));
    CHECK(seen.size() == 300000);
}

TEST_CASE("experiment configs round-trip through json", "[harness]") {
    ExperimentConfig cfg;
    cfg.weight_spec = "nlogn:1";
    cfg.mode = ExperimentMode::Timeline;
    cfg.steps = 1234;
    cfg.replicas = 7;
    cfg.master_seed = 99;
    cfg.boundary = {{-3, 8}};
    cfg.initial_z0 = {{-1, 2}, {4, 1}};
    cfg.origin = 2;
    cfg.window_fraction = 0.25;
    cfg.span_bound = 1 << 16;
    cfg.workers = 3;
    cfg.couple_us = {0.1, 1.0, 10.0};
    cfg.couple_site = -2;
    ExperimentConfig back = ExperimentConfig::from_json(cfg.to_json());
    CHECK(back.to_json() == cfg.to_json());
    CHECK(back.hash() == cfg.hash());
    ExperimentConfig other = cfg;
    other.master_seed = 100;
    CHECK(other.hash() != cfg.hash());
}

TEST_CASE("config validation rejects degenerate settings", "[harness]") {
    ExperimentConfig cfg;
    cfg.replicas = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.replicas = 1;
    cfg.steps = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.steps = 10;
    cfg.weight_spec = "mystery:1";
    CHECK_THROWS_AS(cfg.validate(), ParseError);
}

TEST_CASE("reports are bit-identical across repeated runs", "[harness]") {
    ExperimentConfig cfg;
    cfg.weight_spec = "linear:1,1";
    cfg.mode = ExperimentMode::Walk;
    cfg.steps = 20000;
    cfg.replicas = 8;
    cfg.master_seed = 5;
    cfg.workers = 4;
    AggregateReport a = run_experiment(cfg);
    AggregateReport b = run_experiment(cfg);
    CHECK(a.to_json().dump() == b.to_json().dump());
    REQUIRE(a.replicas.size() == 8);
    CHECK(a.failures == 0);
    std::uint64_t total = 0;
    for (const auto& [size, count] : a.range_histogram) total += count;
    CHECK(total == 8);
    for (const auto& [size, iv] : a.range_intervals) {
        CHECK(iv.lo >= 0.0);
        CHECK(iv.hi <= 1.0);
        CHECK(iv.lo < iv.hi);
    }
}

TEST_CASE("worker count does not change the aggregate", "[harness]") {
    ExperimentConfig cfg;
    cfg.weight_spec = "linear:1,1";
    cfg.mode = ExperimentMode::Urn;
    cfg.steps = 5000;
    cfg.replicas = 12;
    cfg.master_seed = 21;
    cfg.workers = 1;
    AggregateReport serial = run_experiment(cfg);
    cfg.workers = 6;
    AggregateReport parallel = run_experiment(cfg);
    // the echoed config differs in its workers field; the results must not
    nlohmann::json a = serial.to_json(), b = parallel.to_json();
    for (auto* j : {&a, &b}) {
        j->erase("config");
        j->erase("config_hash");
    }
    CHECK(a.dump() == b.dump());
}

TEST_CASE("per-replica failures are quarantined, total failure raises", "[harness]") {
    ExperimentConfig cfg;
    cfg.weight_spec = "const:1";
    cfg.mode = ExperimentMode::Walk;
    cfg.steps = 200000;
    cfg.replicas = 3;
    cfg.master_seed = 1;
    cfg.span_bound = 8;  // every diffusive replica must overflow this
    cfg.workers = 1;
    CHECK_THROWS_AS(run_experiment(cfg), AllReplicasFailed);
}

TEST_CASE("each experiment mode produces its section of the report", "[harness]") {
    {
        ExperimentConfig cfg;
        cfg.mode = ExperimentMode::Timeline;
        cfg.weight_spec = "linear:1,1";
        cfg.steps = 20000;
        cfg.replicas = 4;
        cfg.workers = 2;
        AggregateReport r = run_experiment(cfg);
        CHECK(r.failures == 0);
        CHECK(r.max_conservation_residual < 1e-9);
    }
    {
        ExperimentConfig cfg;
        cfg.mode = ExperimentMode::Couple;
        cfg.weight_spec = "linear:1,1";
        cfg.steps = 2000;
        cfg.replicas = 4;
        cfg.workers = 2;
        AggregateReport r = run_experiment(cfg);
        CHECK(r.failures == 0);
        CHECK(r.total_coupling_violations == 0);
        std::uint64_t compared = 0;
        for (const auto& rs : r.replicas) compared += rs.coupling_compared;
        CHECK(compared > 0);
    }
    {
        ExperimentConfig cfg;
        cfg.mode = ExperimentMode::AlphaC;
        cfg.weight_spec = "nloglog:1,3";
        cfg.alpha_tol = 0.05;
        AggregateReport r = run_experiment(cfg);
        REQUIRE(r.alpha_c.has_value());
        CHECK(r.alpha_c->status == AlphaCStatus::Bracketed);
        CHECK(r.to_json().contains("alpha_c"));
    }
}
