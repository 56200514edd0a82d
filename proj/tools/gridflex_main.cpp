// Command-line front end. Subcommands: validate a run configuration and
// its data files, simulate the hourly scarcity timeline, sweep one
// mechanism over a scale grid, search the covering-contract frontier,
// and fit sector capacities from consumption profiles.
//
// Exit codes: 0 success, 1 configuration or input-data problem,
// 2 runtime failure (non-convergence, no feasible scale, IO).

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "gridflex/engine.hpp"
#include "gridflex/metrics.hpp"
#include "gridflex/portfolio.hpp"
#include "gridflex/scenario.hpp"
#include "gridflex/sector.hpp"

using namespace gridflex;

namespace {

struct Options {
    std::string config;
    std::string out_dir = ".";
    std::optional<long long> seed;
    int jobs = 1;
};

void require_key(const std::string& value, const char* key) {
    if (value.empty())
        throw ValidationError(std::string("config missing key '") + key + "'");
}

struct LoadedCase {
    GridCase gc;
    ScenarioTimeline tl;
};

LoadedCase load_case(const ScenarioConfig& cfg) {
    require_key(cfg.buses, "buses");
    require_key(cfg.branches, "branches");
    require_key(cfg.generators, "generators");
    require_key(cfg.loads, "loads");
    require_key(cfg.timeline, "timeline");
    require_key(cfg.capacity, "capacity");
    LoadedCase lc;
    lc.gc = load_grid_case(cfg.buses, cfg.branches, cfg.generators, cfg.loads);
    lc.tl = load_timeline(lc.gc, cfg.timeline, cfg.capacity, cfg.commitment,
                          cfg.reference_shed);
    return lc;
}

int cmd_validate(const ScenarioConfig& cfg) {
    // Existence pass first, so the message names exactly what is missing.
    std::vector<std::pair<const char*, const std::string*>> paths{
        {"buses", &cfg.buses},           {"branches", &cfg.branches},
        {"generators", &cfg.generators}, {"loads", &cfg.loads},
        {"timeline", &cfg.timeline},     {"capacity", &cfg.capacity},
        {"commitment", &cfg.commitment}, {"reference_shed", &cfg.reference_shed},
        {"profiles", &cfg.profiles}};
    bool missing = false;
    for (auto& [key, p] : paths)
        if (!p->empty() && !std::filesystem::exists(*p)) {
            std::cerr << "missing file for key '" << key << "': " << *p << "\n";
            missing = true;
        }
    if (missing) return 1;

    LoadedCase lc = load_case(cfg);
    if (!cfg.profiles.empty()) load_profiles(cfg.profiles);
    std::cout << "ok: " << lc.gc.buses.size() << " buses, " << lc.gc.branches.size()
              << " branches, " << lc.gc.generators.size() << " generators, "
              << lc.gc.load_buses.size() << " load buses, " << lc.tl.hours() << " hours\n";
    return 0;
}

int cmd_simulate(const ScenarioConfig& cfg, const Options& opt) {
    LoadedCase lc = load_case(cfg);
    SimulationReport rep = run_simulation(lc.gc, lc.tl, scenario_resources(cfg), cfg.engine);

    std::filesystem::create_directories(opt.out_dir);
    write_report_csv(opt.out_dir + "/report.csv", rep);

    std::vector<double> shed;
    shed.reserve(rep.hours.size());
    for (const HourResult& h : rep.hours) shed.push_back(h.shed_total_mw);
    double bw = cfg.kde_bandwidth > 0 ? cfg.kde_bandwidth : silverman_bandwidth(shed);
    if (bw > 0) {
        write_density_csv(opt.out_dir + "/density.csv", shed_density(shed, bw));
    } else {
        std::ofstream out(opt.out_dir + "/density.csv");
        out << "x_mw,density\n";
        std::cerr << "density skipped: shed sample is degenerate, no bandwidth\n";
    }

    double il = 0, ra = 0, inc = 0;
    for (const HourResult& h : rep.hours) {
        il += h.interruptible_mw;
        ra += h.rationing_mw;
        inc += h.incentive_mw;
    }
    std::cout << "hours=" << rep.hours.size() << "\n";
    std::cout << "ens_mwh=" << csv::fmt(rep.ens) << "\n";
    std::cout << "interruptible_mwh=" << csv::fmt(il) << "\n";
    std::cout << "rationing_mwh=" << csv::fmt(ra) << "\n";
    std::cout << "incentive_mwh=" << csv::fmt(inc) << "\n";
    std::cout << "total_curtailment_mwh=" << csv::fmt(rep.ens + il) << "\n";
    if (lc.tl.reference_shed) {
        if (rep.correlation_vs_reference)
            std::cout << "pearson_vs_reference=" << csv::fmt(*rep.correlation_vs_reference)
                      << "\n";
        else
            std::cout << "pearson_vs_reference=undefined\n";
    }
    return 0;
}

int cmd_sweep(const ScenarioConfig& cfg, const Options& opt) {
    if (cfg.sweep_mechanism.empty() || cfg.sweep_grid.empty())
        throw ValidationError("config: sweep needs sweep_mechanism and sweep_grid");
    LoadedCase lc = load_case(cfg);
    MechanismKind mech = detail::cfg_mechanism("sweep_mechanism", cfg.sweep_mechanism);
    std::vector<PortfolioPoint> points =
        marginal_curve(lc.gc, lc.tl, scenario_resources(cfg), cfg.engine, scenario_point(cfg),
                       mech, cfg.sweep_grid, cfg.replications, opt.jobs);

    std::filesystem::create_directories(opt.out_dir);
    write_sweep_csv(opt.out_dir + "/sweep.csv", mech, cfg.sweep_grid, points);
    for (size_t i = 0; i < points.size(); ++i)
        std::cout << to_string(mech) << " scale=" << csv::fmt(cfg.sweep_grid[i])
                  << " ens_mwh=" << csv::fmt(points[i].ens) << "\n";
    return 0;
}

int cmd_frontier(const ScenarioConfig& cfg, const Options& opt) {
    if (cfg.frontier_rationing_grid.empty())
        throw ValidationError("config: frontier needs frontier_rationing_grid");
    LoadedCase lc = load_case(cfg);
    std::vector<PortfolioPoint> rows = frontier_search(
        lc.gc, lc.tl, scenario_resources(cfg), cfg.engine, cfg.incentive_coverage,
        cfg.frontier_rationing_grid, cfg.replications, cfg.frontier_tolerance,
        cfg.frontier_max_scale, opt.jobs);

    std::filesystem::create_directories(opt.out_dir);
    write_frontier_csv(opt.out_dir + "/frontier.csv", rows);
    for (const PortfolioPoint& r : rows)
        std::cout << "rationing_max=" << csv::fmt(r.rationing_max)
                  << " min_interruptible_scale=" << csv::fmt(r.interruptible_scale) << "\n";
    return 0;
}

int cmd_profile_estimate(const ScenarioConfig& cfg, const Options& opt) {
    require_key(cfg.profiles, "profiles");
    SectorProfileMatrix p = load_profiles(cfg.profiles);
    SectorCapacities caps = estimate_sector_capacities(p);
    std::vector<SectorHour> hours = hourly_sector_mw(p, caps);

    std::filesystem::create_directories(opt.out_dir);
    save_sectors(hours, opt.out_dir + "/sectors.csv");
    std::cout << "res_max_mw=" << csv::fmt(caps.r_max) << "\n";
    std::cout << "bus_max_mw=" << csv::fmt(caps.b_max) << "\n";
    std::cout << "oth_max_mw=" << csv::fmt(caps.o_max) << "\n";
    std::cout << "residual_norm=" << csv::fmt(caps.residual_norm) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"grid scarcity simulator and demand-flexibility portfolio explorer"};
    app.require_subcommand(1);

    Options opt;
    app.add_option("--config", opt.config, "run configuration file")->required();
    app.add_option("--out", opt.out_dir, "directory for result csv files");
    app.add_option("--seed", opt.seed, "override the configured master seed");
    app.add_option("--jobs", opt.jobs, "worker threads for replications and grid points")
        ->check(CLI::PositiveNumber);

    CLI::App* validate = app.add_subcommand("validate", "check the config and its data files");
    CLI::App* simulate =
        app.add_subcommand("simulate", "run the timeline, write report.csv and density.csv");
    CLI::App* sweep =
        app.add_subcommand("sweep", "evaluate one mechanism over its grid, write sweep.csv");
    CLI::App* frontier = app.add_subcommand(
        "frontier", "smallest covering interruptible contract per rationing level");
    CLI::App* profile = app.add_subcommand(
        "profile-estimate", "fit sector capacities from profiles, write sectors.csv");
    for (CLI::App* s : {validate, simulate, sweep, frontier, profile}) s->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        ScenarioConfig cfg = load_scenario_config(opt.config);
        if (opt.seed) {
            if (*opt.seed < 0) throw ValidationError("--seed must be non-negative");
            cfg.engine.seed = static_cast<std::uint64_t>(*opt.seed);
        }
        if (app.got_subcommand(validate)) return cmd_validate(cfg);
        if (app.got_subcommand(simulate)) return cmd_simulate(cfg, opt);
        if (app.got_subcommand(sweep)) return cmd_sweep(cfg, opt);
        if (app.got_subcommand(frontier)) return cmd_frontier(cfg, opt);
        if (app.got_subcommand(profile)) return cmd_profile_estimate(cfg, opt);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const DimensionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ModelError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
