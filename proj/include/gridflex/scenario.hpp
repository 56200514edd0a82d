#pragma once

// Run configuration: a flat key=value file naming the grid and timeline
// inputs plus engine, mechanism, and exploration settings. Unknown or
// repeated keys are hard errors so a typo cannot silently change a run.
// Relative paths resolve against the config file's own directory.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gridflex/engine.hpp"
#include "gridflex/errors.hpp"
#include "gridflex/portfolio.hpp"

namespace gridflex {

struct ScenarioConfig {
    std::string buses, branches, generators, loads; // grid description files
    std::string timeline, capacity; // hourly load and available-capacity series
    std::string commitment, reference_shed, profiles; // optional extras

    EngineConfig engine;
    double interruptible_scale = 1.0;
    double rationing_max_frac = 0.0;
    double incentive_coverage = 0.0;

    int replications = 1;
    std::string sweep_mechanism;
    std::vector<double> sweep_grid;
    std::vector<double> frontier_rationing_grid;
    double frontier_tolerance = 0.01;
    double frontier_max_scale = 50.0;
    double kde_bandwidth = 0.0; // 0: Silverman rule from the shed sample
};

namespace detail {

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline double cfg_double(const std::string& key, const std::string& value) {
    size_t used = 0;
    double v = 0;
    try {
        v = std::stod(value, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != value.size())
        throw ParseError("config: key '" + key + "' needs a number, got '" + value + "'");
    return v;
}

inline long long cfg_int(const std::string& key, const std::string& value) {
    size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(value, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != value.size())
        throw ParseError("config: key '" + key + "' needs an integer, got '" + value + "'");
    return v;
}

inline std::vector<double> cfg_grid(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string part;
    while (std::getline(ss, part, ','))
        out.push_back(cfg_double(key, trim(part)));
    if (out.empty()) throw ParseError("config: key '" + key + "' lists no values");
    return out;
}

inline MechanismKind cfg_mechanism(const std::string& key, const std::string& name) {
    if (name == "interruptible") return MechanismKind::InterruptibleLoad;
    if (name == "rationing") return MechanismKind::LoadRationing;
    if (name == "incentive") return MechanismKind::IncentiveDR;
    throw ParseError("config: key '" + key + "' names unknown mechanism '" + name + "'");
}

} // namespace detail

inline void validate_scenario_config(const ScenarioConfig& cfg) {
    validate_engine_config(cfg.engine);
    auto frac = [](double f) { return f >= 0.0 && f <= 1.0; };
    std::string bad;
    if (!(cfg.interruptible_scale >= 0)) bad = "interruptible_scale must be >= 0";
    else if (!frac(cfg.rationing_max_frac)) bad = "rationing_max_frac must lie in [0,1]";
    else if (!frac(cfg.incentive_coverage)) bad = "incentive_coverage must lie in [0,1]";
    else if (!frac(cfg.engine.incentive.active_share))
        bad = "incentive_active_share must lie in [0,1]";
    else if (cfg.engine.incentive.active_sd < 0 || cfg.engine.incentive.inactive_sd < 0)
        bad = "incentive standard deviations must be >= 0";
    else if (cfg.replications < 1) bad = "replications must be >= 1";
    else if (!(cfg.frontier_tolerance > 0)) bad = "frontier_tolerance must be > 0";
    else if (!(cfg.frontier_max_scale > 1)) bad = "frontier_max_scale must be > 1";
    else if (cfg.kde_bandwidth < 0) bad = "kde_bandwidth_mw must be >= 0";
    if (!bad.empty()) throw ValidationError("config: " + bad);
}

inline ScenarioConfig load_scenario_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config " + path);
    std::filesystem::path base = std::filesystem::path(path).parent_path();

    ScenarioConfig cfg;
    std::set<std::string> seen;
    auto resolve = [&](const std::string& value) {
        std::filesystem::path p(value);
        return (p.is_absolute() ? p : base / p).lexically_normal().string();
    };

    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (size_t hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("config line " + std::to_string(lineno) + ": expected key=value");
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ParseError("config line " + std::to_string(lineno) + ": empty key or value");
        if (!seen.insert(key).second) throw ParseError("config: duplicate key '" + key + "'");

        if (key == "buses") cfg.buses = resolve(value);
        else if (key == "branches") cfg.branches = resolve(value);
        else if (key == "generators") cfg.generators = resolve(value);
        else if (key == "loads") cfg.loads = resolve(value);
        else if (key == "timeline") cfg.timeline = resolve(value);
        else if (key == "capacity") cfg.capacity = resolve(value);
        else if (key == "commitment") cfg.commitment = resolve(value);
        else if (key == "reference_shed") cfg.reference_shed = resolve(value);
        else if (key == "profiles") cfg.profiles = resolve(value);
        else if (key == "p_r_min_mw") cfg.engine.p_r_min = detail::cfg_double(key, value);
        else if (key == "shed_step_mw") cfg.engine.shed_step = detail::cfg_double(key, value);
        else if (key == "interrupt_threshold_mw")
            cfg.engine.interrupt_threshold = detail::cfg_double(key, value);
        else if (key == "mechanism_order") {
            cfg.engine.mechanism_order.clear();
            std::stringstream ss(value);
            std::string part;
            while (std::getline(ss, part, ','))
                cfg.engine.mechanism_order.push_back(
                    detail::cfg_mechanism(key, detail::trim(part)));
        } else if (key == "max_iterations_per_hour") {
            cfg.engine.max_iterations_per_hour =
                static_cast<int>(detail::cfg_int(key, value));
        } else if (key == "seed") {
            long long v = detail::cfg_int(key, value);
            if (v < 0) throw ParseError("config: key 'seed' needs a non-negative integer");
            cfg.engine.seed = static_cast<std::uint64_t>(v);
        } else if (key == "interruptible_scale")
            cfg.interruptible_scale = detail::cfg_double(key, value);
        else if (key == "rationing_max_frac")
            cfg.rationing_max_frac = detail::cfg_double(key, value);
        else if (key == "incentive_coverage")
            cfg.incentive_coverage = detail::cfg_double(key, value);
        else if (key == "incentive_active_share")
            cfg.engine.incentive.active_share = detail::cfg_double(key, value);
        else if (key == "incentive_active_mean")
            cfg.engine.incentive.active_mean = detail::cfg_double(key, value);
        else if (key == "incentive_active_sd")
            cfg.engine.incentive.active_sd = detail::cfg_double(key, value);
        else if (key == "incentive_inactive_mean")
            cfg.engine.incentive.inactive_mean = detail::cfg_double(key, value);
        else if (key == "incentive_inactive_sd")
            cfg.engine.incentive.inactive_sd = detail::cfg_double(key, value);
        else if (key == "replications")
            cfg.replications = static_cast<int>(detail::cfg_int(key, value));
        else if (key == "sweep_mechanism") {
            detail::cfg_mechanism(key, value); // name check only
            cfg.sweep_mechanism = value;
        } else if (key == "sweep_grid") cfg.sweep_grid = detail::cfg_grid(key, value);
        else if (key == "frontier_rationing_grid")
            cfg.frontier_rationing_grid = detail::cfg_grid(key, value);
        else if (key == "frontier_tolerance")
            cfg.frontier_tolerance = detail::cfg_double(key, value);
        else if (key == "frontier_max_scale")
            cfg.frontier_max_scale = detail::cfg_double(key, value);
        else if (key == "kde_bandwidth_mw") cfg.kde_bandwidth = detail::cfg_double(key, value);
        else throw ParseError("config: unknown key '" + key + "'");
    }

    cfg.engine.incentive.coverage = cfg.incentive_coverage;
    validate_scenario_config(cfg);
    return cfg;
}

/// The three mechanism resources a run uses: default shapes with the
/// configured sizes applied.
inline std::vector<FlexResource> scenario_resources(const ScenarioConfig& cfg) {
    FlexResource il = default_resource(MechanismKind::InterruptibleLoad);
    il.scale = cfg.interruptible_scale;
    FlexResource ra = default_resource(MechanismKind::LoadRationing);
    ra.p_max = cfg.rationing_max_frac;
    FlexResource inc = default_resource(MechanismKind::IncentiveDR);
    return {il, ra, inc};
}

inline PortfolioPoint scenario_point(const ScenarioConfig& cfg) {
    PortfolioPoint pt;
    pt.interruptible_scale = cfg.interruptible_scale;
    pt.rationing_max = cfg.rationing_max_frac;
    pt.incentive_coverage = cfg.incentive_coverage;
    return pt;
}

} // namespace gridflex
