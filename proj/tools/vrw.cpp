// vrw: command-line frontend for the reinforced-walk / w-urn toolkit.
//
// Subcommands wrap each library module; outputs are JSON summaries plus
// optional CSV detail tables. Exit codes: 0 success, 1 check/assertion
// failure, 2 usage error. All formats are frozen in docs/FORMATS.md.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vrw/harness.hpp"

namespace {

using nlohmann::json;

struct CheckFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void write_output(const json& j, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::ofstream os(out_path);
    if (!os) throw vrw::ResourceError("cannot open output file: " + out_path);
    os << j.dump(2) << "\n";
}

std::optional<std::pair<long, long>> parse_boundary(const std::string& s) {
    if (s.empty()) return std::nullopt;
    std::size_t comma = s.find(',');
    if (comma == std::string::npos)
        throw vrw::ConfigError("--boundary expects two comma-separated sites, e.g. 0,4");
    return std::make_pair(std::stol(s.substr(0, comma)), std::stol(s.substr(comma + 1)));
}

json report_to_json(const vrw::AggregateReport& rep) { return rep.to_json(); }

// Residual/identity gates applied in --check mode (tolerances are part of
// the acceptance surface and mirrored in the test suite).
constexpr double kIdentityTol = 1.0e-9;

void check_report(const vrw::AggregateReport& rep) {
    if (rep.max_ynpm_residual > kIdentityTol)
        throw CheckFailure("Ynpm residual exceeds tolerance");
    if (rep.max_eqw_drift > kIdentityTol)
        throw CheckFailure("eqW constancy drift exceeds tolerance");
    if (rep.max_conservation_residual > kIdentityTol)
        throw CheckFailure("clock conservation residual exceeds tolerance");
    if (rep.total_coupling_violations != 0)
        throw CheckFailure("coupling monotonicity violated");
    if (rep.failures > 0) throw CheckFailure("replica failures recorded");
}

int run_cli(int argc, char** argv) {
    CLI::App app{"vrw: vertex-reinforced random walk and w-urn toolkit"};
    app.require_subcommand(1);

    std::string weight = "linear:1,1";
    std::uint64_t steps = 100000, replicas = 1, seed = 0;
    std::string boundary_str, out_path, config_path, trajectory_path;
    double window_fraction = 0.5, tol = 0.05;
    std::uint64_t cadence = 1, span_bound = std::uint64_t(1) << 22;
    unsigned workers = 0;
    bool check = false, rubin = false;
    long site = 0;
    std::vector<double> couple_us = {0.5, 2.0};

    auto add_common = [&](CLI::App* sub, bool with_steps = true) {
        sub->add_option("--weight", weight, "weight spec (see FORMATS.md grammar)");
        sub->add_option("--seed", seed, "master seed (replica seeds derive from it)");
        if (with_steps) {
            sub->add_option("--steps", steps, "steps / draws per replica");
            sub->add_option("--replicas", replicas, "number of replicas");
            sub->add_option("--boundary", boundary_str, "reflecting interval a,b");
            sub->add_option("--workers", workers, "worker threads (0 = hardware)");
        }
        sub->add_option("--out", out_path, "output JSON path (default: stdout)");
        sub->add_flag("--check", check, "exit 1 when any invariant/assertion fails");
    };

    CLI::App* sim = app.add_subcommand("simulate", "direct VRRW simulation");
    add_common(sim);
    sim->add_option("--window", window_fraction, "detector window fraction");
    sim->add_option("--span-bound", span_bound, "abort when the visited range exceeds this");
    sim->add_option("--trajectory", trajectory_path, "CSV of (step,pos) for replica 0");
    sim->add_option("--cadence", cadence, "trajectory sampling cadence");

    CLI::App* urn = app.add_subcommand("urn", "w-urn simulation");
    add_common(urn);
    urn->add_flag("--rubin", rubin, "use the exponential-embedding construction");

    CLI::App* tl = app.add_subcommand("timeline", "clock-race construction run");
    add_common(tl);

    CLI::App* cp = app.add_subcommand("couple", "monotone coupling comparisons");
    add_common(cp);
    cp->add_option("--site", site, "coupling site x");
    cp->add_option("--us", couple_us, "free-parameter values (ascending)");

    CLI::App* ac = app.add_subcommand("alpha-c", "critical parameter bracketing");
    add_common(ac, false);
    ac->add_option("--tol", tol, "bracket width target");

    CLI::App* ex = app.add_subcommand("experiment", "run a declarative experiment config");
    ex->add_option("--config", config_path, "experiment JSON config")->required();
    ex->add_option("--out", out_path, "output JSON path (default: stdout)");
    ex->add_flag("--check", check, "exit 1 when any invariant/assertion fails");

    CLI::App* rp = app.add_subcommand("report", "re-emit an experiment report as CSV tables");
    std::string in_path, csv_dir = ".";
    rp->add_option("--in", in_path, "report JSON produced by `experiment`")->required();
    rp->add_option("--csv-dir", csv_dir, "directory for the CSV tables");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError&) {
        std::cerr << app.help() << "\n";
        return 2;
    }

    try {
        vrw::ExperimentConfig cfg;
        cfg.weight_spec = weight;
        cfg.steps = steps;
        cfg.replicas = replicas;
        cfg.master_seed = seed;
        cfg.boundary = parse_boundary(boundary_str);
        cfg.window_fraction = window_fraction;
        cfg.span_bound = span_bound;
        cfg.workers = workers;
        cfg.alpha_tol = tol;
        cfg.couple_us = couple_us;
        cfg.couple_site = site;

        if (sim->parsed()) {
            cfg.mode = vrw::ExperimentMode::Walk;
            if (!trajectory_path.empty()) {
                // dedicated pass for the trajectory CSV of replica 0
                vrw::WeightFunction wf = vrw::parse_weight_spec(cfg.weight_spec);
                vrw::Rng rng(vrw::seed_stream(cfg.master_seed, 0));
                vrw::InitialConfig ic;
                vrw::Boundary bd = cfg.boundary ? vrw::Boundary::reflect(cfg.boundary->first,
                                                                         cfg.boundary->second)
                                                : vrw::Boundary::free_line();
                vrw::WalkState s(ic, bd, cfg.span_bound);
                std::ofstream os(trajectory_path);
                if (!os) throw vrw::ResourceError("cannot open " + trajectory_path);
                os << "step,pos\n0," << s.pos() << "\n";
                for (std::uint64_t k = 0; k < cfg.steps; ++k) {
                    s.step(wf, rng);
                    if ((k + 1) % cadence == 0) os << (k + 1) << "," << s.pos() << "\n";
                }
            }
            auto rep = vrw::run_experiment(cfg);
            write_output(report_to_json(rep), out_path);
            if (check) check_report(rep);
        } else if (urn->parsed()) {
            cfg.mode = vrw::ExperimentMode::Urn;
            if (!rubin) {
                auto rep = vrw::run_experiment(cfg);
                write_output(report_to_json(rep), out_path);
                if (check) check_report(rep);
            } else {
                vrw::WeightFunction wf = vrw::parse_weight_spec(cfg.weight_spec);
                vrw::WCache cache(wf);
                json reps = json::array();
                for (std::uint64_t i = 0; i < cfg.replicas; ++i) {
                    vrw::Rng rng(vrw::seed_stream(cfg.master_seed, i));
                    vrw::UrnState s;
                    std::uint64_t ties = 0;
                    vrw::urn_run_rubin(s, cache, cfg.steps, rng, &ties);
                    reps.push_back({{"index", i},
                                    {"mhat", s.mhat},
                                    {"y_red", s.y_red.value()},
                                    {"y_blue", s.y_blue.value()},
                                    {"sign_changes", s.sign_changes},
                                    {"ties", ties}});
                }
                json j;
                j["version"] = vrw::kVersion;
                j["config"] = cfg.to_json();
                j["construction"] = "rubin";
                j["replicas"] = reps;
                write_output(j, out_path);
            }
        } else if (tl->parsed()) {
            cfg.mode = vrw::ExperimentMode::Timeline;
            auto rep = vrw::run_experiment(cfg);
            write_output(report_to_json(rep), out_path);
            if (check) check_report(rep);
        } else if (cp->parsed()) {
            cfg.mode = vrw::ExperimentMode::Couple;
            auto rep = vrw::run_experiment(cfg);
            write_output(report_to_json(rep), out_path);
            if (check) check_report(rep);
        } else if (ac->parsed()) {
            cfg.mode = vrw::ExperimentMode::AlphaC;
            auto rep = vrw::run_experiment(cfg);
            write_output(report_to_json(rep), out_path);
        } else if (ex->parsed()) {
            std::ifstream is(config_path);
            if (!is) {
                std::cerr << "cannot open config file: " << config_path << "\n";
                return 2;
            }
            json jc;
            is >> jc;
            vrw::ExperimentConfig file_cfg = vrw::ExperimentConfig::from_json(jc);
            auto rep = vrw::run_experiment(file_cfg);
            write_output(report_to_json(rep), out_path);
            if (check) check_report(rep);
        } else if (rp->parsed()) {
            std::ifstream is(in_path);
            if (!is) {
                std::cerr << "cannot open report file: " << in_path << "\n";
                return 2;
            }
            json j;
            is >> j;
            std::filesystem::create_directories(csv_dir);
            {
                std::ofstream os(std::filesystem::path(csv_dir) / "range_histogram.csv");
                os << "range_size,count,wilson_lo,wilson_hi\n";
                if (j.contains("range_histogram"))
                    for (const auto& [size, cell] : j.at("range_histogram").items())
                        os << size << "," << cell.at("count").get<std::uint64_t>() << ","
                           << cell.at("wilson_lo").get<double>() << ","
                           << cell.at("wilson_hi").get<double>() << "\n";
            }
            {
                std::ofstream os(std::filesystem::path(csv_dir) / "replicas.csv");
                os << "index,seed,failed,range_size,ynpm_residual,eqw_drift\n";
                if (j.contains("replicas"))
                    for (const auto& r : j.at("replicas")) {
                        os << r.value("index", std::uint64_t(0)) << ","
                           << r.value("seed", std::uint64_t(0)) << ","
                           << (r.value("failed", false) ? 1 : 0) << ","
                           << r.value("range_size", std::size_t(0)) << ","
                           << r.value("ynpm_residual", 0.0) << ","
                           << r.value("eqw_drift", 0.0) << "\n";
                    }
            }
        }
    } catch (const CheckFailure& e) {
        std::cerr << "check failed: " << e.what() << "\n";
        return 1;
    } catch (const vrw::ParseError& e) {
        std::cerr << "weight spec error: " << e.what() << "\n";
        return 2;
    } catch (const vrw::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) { return run_cli(argc, argv); }
