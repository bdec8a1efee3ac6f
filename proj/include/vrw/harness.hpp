#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "vrw/alpha.hpp"
#include "vrw/common.hpp"
#include "vrw/rng.hpp"
#include "vrw/stats.hpp"
#include "vrw/timeline.hpp"
#include "vrw/urn.hpp"
#include "vrw/walk.hpp"
#include "vrw/weights.hpp"

namespace vrw {

/// Replica seed derivation: a fixed avalanche mix of (master_seed, index).
/// Golden value frozen in the format document: seed_stream(0, 0) =
/// 16294208416658607535 (0xE220A8397B1DCDAF).
inline std::uint64_t seed_stream(std::uint64_t master_seed, std::uint64_t replica_index) {
    return mix64(master_seed + replica_index * 0x9e3779b97f4a7c15ULL);
}

enum class ExperimentMode { Walk, Urn, Timeline, Couple, AlphaC };

inline const char* to_string(ExperimentMode m) {
    switch (m) {
        case ExperimentMode::Walk: return "walk";
        case ExperimentMode::Urn: return "urn";
        case ExperimentMode::Timeline: return "timeline";
        case ExperimentMode::Couple: return "couple";
        case ExperimentMode::AlphaC: return "alpha-c";
    }
    return "?";
}

inline ExperimentMode experiment_mode_from(const std::string& s) {
    if (s == "walk") return ExperimentMode::Walk;
    if (s == "urn") return ExperimentMode::Urn;
    if (s == "timeline") return ExperimentMode::Timeline;
    if (s == "couple") return ExperimentMode::Couple;
    if (s == "alpha-c") return ExperimentMode::AlphaC;
    throw ConfigError("unknown experiment mode: " + s);
}

struct ExperimentConfig {
    std::string weight_spec = "linear:1,1";
    ExperimentMode mode = ExperimentMode::Walk;
    std::uint64_t steps = 100000;
    std::uint64_t replicas = 1;
    std::uint64_t master_seed = 0;
    std::optional<std::pair<long, long>> boundary;
    std::map<long, std::uint64_t> initial_z0;
    long origin = 0;
    double window_fraction = 0.5;
    std::uint64_t span_bound = std::uint64_t(1) << 22;
    unsigned workers = 0;  // 0 = hardware concurrency
    double alpha_tol = 0.05;                // AlphaC mode
    std::vector<double> couple_us = {0.5, 2.0};  // Couple mode
    long couple_site = 0;

    void validate() const {
        if (replicas < 1) throw ConfigError("config: replicas must be >= 1");
        if (steps < 1) throw ConfigError("config: steps must be >= 1");
        parse_weight_spec(weight_spec);  // throws ParseError if malformed
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["weight"] = weight_spec;
        j["mode"] = to_string(mode);
        j["steps"] = steps;
        j["replicas"] = replicas;
        j["master_seed"] = master_seed;
        if (boundary) j["boundary"] = {boundary->first, boundary->second};
        if (!initial_z0.empty()) {
            nlohmann::json z;
            for (const auto& [x, c] : initial_z0) z[std::to_string(x)] = c;
            j["initial_z0"] = z;
        }
        j["origin"] = origin;
        j["window_fraction"] = window_fraction;
        j["span_bound"] = span_bound;
        j["workers"] = workers;
        j["alpha_tol"] = alpha_tol;
        j["couple_us"] = couple_us;
        j["couple_site"] = couple_site;
        return j;
    }

    static ExperimentConfig from_json(const nlohmann::json& j) {
        ExperimentConfig c;
        if (j.contains("weight")) c.weight_spec = j.at("weight").get<std::string>();
        if (j.contains("mode")) c.mode = experiment_mode_from(j.at("mode").get<std::string>());
        if (j.contains("steps")) c.steps = j.at("steps").get<std::uint64_t>();
        if (j.contains("replicas")) c.replicas = j.at("replicas").get<std::uint64_t>();
        if (j.contains("master_seed")) c.master_seed = j.at("master_seed").get<std::uint64_t>();
        if (j.contains("boundary")) {
            auto b = j.at("boundary");
            c.boundary = {b.at(0).get<long>(), b.at(1).get<long>()};
        }
        if (j.contains("initial_z0"))
            for (const auto& [k, v] : j.at("initial_z0").items())
                c.initial_z0[std::stol(k)] = v.get<std::uint64_t>();
        if (j.contains("origin")) c.origin = j.at("origin").get<long>();
        if (j.contains("window_fraction")) c.window_fraction = j.at("window_fraction").get<double>();
        if (j.contains("span_bound")) c.span_bound = j.at("span_bound").get<std::uint64_t>();
        if (j.contains("workers")) c.workers = j.at("workers").get<unsigned>();
        if (j.contains("alpha_tol")) c.alpha_tol = j.at("alpha_tol").get<double>();
        if (j.contains("couple_us")) c.couple_us = j.at("couple_us").get<std::vector<double>>();
        if (j.contains("couple_site")) c.couple_site = j.at("couple_site").get<long>();
        c.validate();
        return c;
    }

    std::uint64_t hash() const {
        std::uint64_t h = 0x6d656e74636f6e66ULL;
        for (char ch : to_json().dump()) h = mix64(h ^ static_cast<unsigned char>(ch));
        return h;
    }
};

struct ReplicaSummary {
    std::uint64_t index = 0;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string error;
    // walk fields
    std::size_t range_size = 0;
    long range_lo = 0, range_hi = 0;
    double ynpm_residual = 0.0;
    double eqw_drift = 0.0;
    double edge_max = 0.0, central_min = 0.0, center = 0.0, flank_sum = 0.0;
    bool profile_valid = false;
    // urn fields
    double mhat = 0.0;
    double y_red = 0.0, y_blue = 0.0;
    std::uint64_t sign_changes = 0;
    // timeline fields
    double conservation_residual = 0.0;
    std::uint64_t ties = 0;
    // couple fields
    std::uint64_t coupling_violations = 0;
    std::uint64_t coupling_compared = 0;
};

struct AggregateReport {
    ExperimentConfig config;
    std::map<std::size_t, std::uint64_t> range_histogram;
    std::map<std::size_t, Interval> range_intervals;  // Wilson 95%
    double max_ynpm_residual = 0.0;
    double max_eqw_drift = 0.0;
    double max_conservation_residual = 0.0;
    std::uint64_t total_coupling_violations = 0;
    std::uint64_t failures = 0;
    std::vector<ReplicaSummary> replicas;
    // alpha-c mode result
    std::optional<AlphaCEstimate> alpha_c;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["version"] = kVersion;
        j["config"] = config.to_json();
        j["config_hash"] = config.hash();
        nlohmann::json hist;
        for (const auto& [size, count] : range_histogram) {
            Interval iv = range_intervals.count(size) ? range_intervals.at(size) : Interval{};
            hist[std::to_string(size)] = {{"count", count},
                                          {"wilson_lo", iv.lo},
                                          {"wilson_hi", iv.hi}};
        }
        j["range_histogram"] = hist;
        j["max_ynpm_residual"] = max_ynpm_residual;
        j["max_eqw_drift"] = max_eqw_drift;
        j["max_conservation_residual"] = max_conservation_residual;
        j["total_coupling_violations"] = total_coupling_violations;
        j["failures"] = failures;
        nlohmann::json reps = nlohmann::json::array();
        for (const auto& r : replicas) {
            nlohmann::json jr;
            jr["index"] = r.index;
            jr["seed"] = r.seed;
            jr["failed"] = r.failed;
            if (r.failed) jr["error"] = r.error;
            jr["range_size"] = r.range_size;
            jr["range"] = {r.range_lo, r.range_hi};
            jr["ynpm_residual"] = r.ynpm_residual;
            jr["eqw_drift"] = r.eqw_drift;
            if (r.profile_valid) {
                jr["edge_max"] = r.edge_max;
                jr["central_min"] = r.central_min;
                if (r.range_size == 5) {
                    jr["center"] = r.center;
                    jr["flank_sum"] = r.flank_sum;
                }
            }
            if (config.mode == ExperimentMode::Urn) {
                jr["mhat"] = r.mhat;
                jr["y_red"] = r.y_red;
                jr["y_blue"] = r.y_blue;
                jr["sign_changes"] = r.sign_changes;
            }
            if (config.mode == ExperimentMode::Timeline) {
                jr["conservation_residual"] = r.conservation_residual;
                jr["ties"] = r.ties;
            }
            if (config.mode == ExperimentMode::Couple) {
                jr["coupling_violations"] = r.coupling_violations;
                jr["coupling_compared"] = r.coupling_compared;
            }
            reps.push_back(jr);
        }
        j["replicas"] = reps;
        if (alpha_c) {
            j["alpha_c"] = {{"status", to_string(alpha_c->status)},
                            {"lower", alpha_c->lower},
                            {"upper", alpha_c->upper}};
        }
        return j;
    }
};

struct AllReplicasFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline ReplicaSummary run_one_replica(const ExperimentConfig& cfg, const WeightFunction& wf,
                                      WCache& cache, std::uint64_t index) {
    ReplicaSummary rs;
    rs.index = index;
    rs.seed = seed_stream(cfg.master_seed, index);
    try {
        Rng rng(rs.seed);
        switch (cfg.mode) {
            case ExperimentMode::Walk: {
                InitialConfig ic;
                ic.z0 = cfg.initial_z0;
                ic.origin = cfg.origin;
                Boundary bd = cfg.boundary
                                  ? Boundary::reflect(cfg.boundary->first, cfg.boundary->second)
                                  : Boundary::free_line();
                ReplicaResult r = vrrw_run(wf, cache, ic, bd, cfg.steps, rng,
                                           cfg.window_fraction, cfg.origin, cfg.span_bound);
                rs.range_size = r.report.range_size;
                rs.range_lo = r.report.range_lo;
                rs.range_hi = r.report.range_hi;
                rs.ynpm_residual = r.ynpm_residual;
                rs.eqw_drift = r.eqw_drift;
                ProfileSummary p = profile_summary(r.report);
                rs.profile_valid = p.valid;
                rs.edge_max = p.edge_max;
                rs.central_min = p.central_min;
                rs.center = p.center;
                rs.flank_sum = p.flank_sum;
                break;
            }
            case ExperimentMode::Urn: {
                UrnState s;
                auto trace = urn_run_direct(s, cache, cfg.steps, rng,
                                            std::max<std::uint64_t>(1, cfg.steps / 10));
                rs.mhat = s.mhat;
                rs.y_red = s.y_red.value();
                rs.y_blue = s.y_blue.value();
                rs.sign_changes = s.sign_changes;
                break;
            }
            case ExperimentMode::Timeline: {
                InitialConfig ic;
                ic.z0 = cfg.initial_z0;
                ic.origin = cfg.origin;
                Boundary bd = cfg.boundary
                                  ? Boundary::reflect(cfg.boundary->first, cfg.boundary->second)
                                  : Boundary::free_line();
                FixedRandomness xi = with_boundary(FixedRandomness(rs.seed), bd);
                auto r = timeline_run(wf, xi, ic, bd, cfg.steps, false);
                rs.conservation_residual = r.conservation_residual;
                rs.ties = r.ties;
                break;
            }
            case ExperimentMode::Couple: {
                Boundary bd = cfg.boundary
                                  ? Boundary::reflect(cfg.boundary->first, cfg.boundary->second)
                                  : Boundary::free_line();
                auto vs = couple_family(wf, cfg.couple_site, cfg.couple_us, rs.seed,
                                        cfg.steps, bd);
                for (const auto& v : vs) {
                    rs.coupling_violations += v.total();
                    rs.coupling_compared += v.compared;
                }
                break;
            }
            case ExperimentMode::AlphaC:
                // handled at the aggregate level; nothing per-replica
                break;
        }
    } catch (const std::exception& e) {
        rs.failed = true;
        rs.error = e.what();
    }
    return rs;
}

}  // namespace detail

/// Runs all replicas (parallel up to `workers`), aggregates order-insensitively
/// (results land in an index-addressed slot), and quarantines per-replica
/// failures instead of aborting.
inline AggregateReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    AggregateReport rep;
    rep.config = cfg;
    WeightFunction wf = parse_weight_spec(cfg.weight_spec);
    WCache cache(wf);

    if (cfg.mode == ExperimentMode::AlphaC) {
        rep.alpha_c = estimate_alpha_c(cache, cfg.alpha_tol);
        return rep;
    }

    std::uint64_t n = cfg.replicas;
    rep.replicas.resize(n);
    unsigned workers = cfg.workers ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(n));
    if (workers <= 1) {
        for (std::uint64_t i = 0; i < n; ++i)
            rep.replicas[i] = detail::run_one_replica(cfg, wf, cache, i);
    } else {
        std::mutex m;
        std::uint64_t next = 0;
        auto worker = [&] {
            for (;;) {
                std::uint64_t i;
                {
                    std::lock_guard<std::mutex> lk(m);
                    if (next >= n) return;
                    i = next++;
                }
                ReplicaSummary rs = detail::run_one_replica(cfg, wf, cache, i);
                std::lock_guard<std::mutex> lk(m);
                rep.replicas[i] = std::move(rs);
            }
        };
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (const auto& rs : rep.replicas) {
        if (rs.failed) {
            ++rep.failures;
            continue;
        }
        if (cfg.mode == ExperimentMode::Walk) {
            rep.range_histogram[rs.range_size] += 1;
            rep.max_ynpm_residual = std::max(rep.max_ynpm_residual, rs.ynpm_residual);
            rep.max_eqw_drift = std::max(rep.max_eqw_drift, rs.eqw_drift);
        }
        rep.max_conservation_residual =
            std::max(rep.max_conservation_residual, rs.conservation_residual);
        rep.total_coupling_violations += rs.coupling_violations;
    }
    if (rep.failures == n) throw AllReplicasFailed("every replica failed");
    std::uint64_t ok = n - rep.failures;
    for (const auto& [size, count] : rep.range_histogram)
        rep.range_intervals[size] = wilson_interval(count, ok);
    return rep;
}

}  // namespace vrw
