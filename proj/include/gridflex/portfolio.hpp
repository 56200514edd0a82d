#pragma once

// Portfolio exploration over mechanism scales: repeated simulations with
// derived seeds, marginal-effect curves over a scale grid, and bisection
// for the smallest interruptible contract that eliminates all forced
// shedding at each rationing level.
//
// Seeding rule: replication r of grid point i runs with
// derive_stream(master_seed, i, r), so results do not depend on
// evaluation order and points may run on worker threads.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "gridflex/engine.hpp"
#include "gridflex/errors.hpp"

namespace gridflex {

struct PortfolioPoint {
    double interruptible_scale = 1.0;
    double rationing_max = 0.0; // fraction of residential load
    double incentive_coverage = 0.0; // fraction of residential customers
    double ens = 0; // mean over replications, MWh
    std::optional<std::pair<double, double>> ens_ci; // 2.5/97.5 percentiles
    std::vector<double> samples; // per-replication ENS values
};

namespace detail {

/// Runs fn(i) for i in [0, n) on up to jobs threads. Any exception is
/// rethrown on the caller thread after all workers finish.
template <typename Fn>
inline void parallel_for(int n, int jobs, Fn&& fn) {
    jobs = std::max(1, std::min(jobs, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(jobs);
    for (int w = 0; w < jobs; ++w)
        pool.emplace_back([&, w] {
            try {
                for (int i = w; i < n; i += jobs) fn(i);
            } catch (...) {
                errs[w] = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

inline double percentile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    double pos = q * static_cast<double>(v.size() - 1);
    size_t lo = static_cast<size_t>(pos);
    size_t hi = std::min(lo + 1, v.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return v[lo] * (1 - frac) + v[hi] * frac;
}

/// Builds the resource set for one portfolio point from prototype
/// resources (ramps, durations) with the point's knobs applied.
inline std::vector<FlexResource> point_resources(const std::vector<FlexResource>& prototypes,
                                                 const PortfolioPoint& pt) {
    auto pick = [&](MechanismKind k) {
        for (const FlexResource& r : prototypes)
            if (r.kind == k) return r;
        return default_resource(k);
    };
    FlexResource il = pick(MechanismKind::InterruptibleLoad);
    il.scale = pt.interruptible_scale;
    FlexResource ra = pick(MechanismKind::LoadRationing);
    ra.p_max = pt.rationing_max;
    FlexResource inc = pick(MechanismKind::IncentiveDR);
    return {il, ra, inc};
}

} // namespace detail

/// Simulates one portfolio point over the requested replications and
/// summarizes the ENS distribution. Stochastic points (any incentive
/// coverage) require enough replications for a meaningful interval.
inline PortfolioPoint evaluate_portfolio(const GridCase& gc, const ScenarioTimeline& tl,
                                         const std::vector<FlexResource>& prototypes,
                                         const EngineConfig& base_cfg, PortfolioPoint pt,
                                         int replications, std::uint64_t scenario_index = 0,
                                         int jobs = 1) {
    if (replications < 1) throw ValidationError("portfolio: replications must be >= 1");
    if (pt.incentive_coverage > 0 && replications < 30)
        throw ValidationError("portfolio: stochastic portfolios need >= 30 replications, got " +
                              std::to_string(replications));
    if (!(pt.interruptible_scale >= 0) || !(pt.rationing_max >= 0 && pt.rationing_max <= 1) ||
        !(pt.incentive_coverage >= 0 && pt.incentive_coverage <= 1))
        throw ValidationError("portfolio: point settings out of range");

    std::vector<FlexResource> resources = detail::point_resources(prototypes, pt);
    pt.samples.assign(replications, 0.0);
    detail::parallel_for(replications, jobs, [&](int r) {
        EngineConfig cfg = base_cfg;
        cfg.incentive.coverage = pt.incentive_coverage;
        cfg.seed = derive_stream(base_cfg.seed, scenario_index, static_cast<std::uint64_t>(r));
        pt.samples[r] = run_simulation(gc, tl, resources, cfg).ens;
    });

    pt.ens = 0;
    for (double v : pt.samples) pt.ens += v;
    pt.ens /= static_cast<double>(replications);
    if (pt.incentive_coverage > 0)
        pt.ens_ci = {detail::percentile(pt.samples, 0.025), detail::percentile(pt.samples, 0.975)};
    return pt;
}

/// Evaluates one mechanism over a scale grid, other mechanisms pinned at
/// the base point. Grid index doubles as the seed scenario index.
inline std::vector<PortfolioPoint> marginal_curve(const GridCase& gc, const ScenarioTimeline& tl,
                                                  const std::vector<FlexResource>& prototypes,
                                                  const EngineConfig& base_cfg,
                                                  const PortfolioPoint& base_pt,
                                                  MechanismKind mechanism,
                                                  const std::vector<double>& scale_grid,
                                                  int replications, int jobs = 1) {
    if (scale_grid.empty()) throw ValidationError("portfolio: empty scale grid");
    for (size_t i = 1; i < scale_grid.size(); ++i)
        if (!(scale_grid[i] > scale_grid[i - 1]))
            throw ValidationError("portfolio: scale grid must be strictly increasing");

    std::vector<PortfolioPoint> out(scale_grid.size());
    detail::parallel_for(static_cast<int>(scale_grid.size()), jobs, [&](int i) {
        PortfolioPoint pt = base_pt;
        switch (mechanism) {
            case MechanismKind::InterruptibleLoad: pt.interruptible_scale = scale_grid[i]; break;
            case MechanismKind::LoadRationing: pt.rationing_max = scale_grid[i]; break;
            case MechanismKind::IncentiveDR: pt.incentive_coverage = scale_grid[i]; break;
        }
        out[i] = evaluate_portfolio(gc, tl, prototypes, base_cfg, pt, replications,
                                    static_cast<std::uint64_t>(i));
    });
    return out;
}

/// Smallest interruptible scale with zero forced shedding in every
/// replication, per rationing level, found by bisection on [1, max_scale].
/// Returns one point per rationing level with .interruptible_scale set to
/// the frontier value.
inline std::vector<PortfolioPoint> frontier_search(const GridCase& gc, const ScenarioTimeline& tl,
                                                   const std::vector<FlexResource>& prototypes,
                                                   const EngineConfig& base_cfg,
                                                   double incentive_coverage,
                                                   const std::vector<double>& rationing_grid,
                                                   int replications, double tolerance = 0.01,
                                                   double max_scale = 50.0, int jobs = 1) {
    if (rationing_grid.empty()) throw ValidationError("portfolio: empty rationing grid");
    if (!(tolerance > 0)) throw ValidationError("portfolio: tolerance must be > 0");

    std::vector<PortfolioPoint> out;
    for (size_t j = 0; j < rationing_grid.size(); ++j) {
        auto eval = [&](double scale) {
            PortfolioPoint pt;
            pt.interruptible_scale = scale;
            pt.rationing_max = rationing_grid[j];
            pt.incentive_coverage = incentive_coverage;
            return evaluate_portfolio(gc, tl, prototypes, base_cfg, pt, replications,
                                      static_cast<std::uint64_t>(j), jobs);
        };
        auto all_zero = [](const PortfolioPoint& pt) {
            for (double v : pt.samples)
                if (v > 0) return false;
            return true;
        };

        PortfolioPoint at_lo = eval(1.0);
        if (all_zero(at_lo)) {
            out.push_back(std::move(at_lo));
            continue;
        }
        double lo = 1.0, hi = max_scale;
        PortfolioPoint at_hi = eval(hi);
        if (!all_zero(at_hi))
            throw NoFeasibleScale("frontier: shedding persists at rationing " +
                                  csv::fmt(rationing_grid[j]) + " even at scale " +
                                  csv::fmt(max_scale));
        while (hi - lo > tolerance) {
            double mid = 0.5 * (lo + hi);
            PortfolioPoint at_mid = eval(mid);
            if (all_zero(at_mid)) {
                hi = mid;
                at_hi = std::move(at_mid);
            } else {
                lo = mid;
            }
        }
        at_hi.interruptible_scale = hi;
        out.push_back(std::move(at_hi));
    }
    return out;
}

inline void write_sweep_csv(const std::string& path, MechanismKind mechanism,
                            const std::vector<double>& scale_grid,
                            const std::vector<PortfolioPoint>& points) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << "mechanism,scale,ens_mean,ens_lo,ens_hi\n";
    for (size_t i = 0; i < points.size(); ++i) {
        double lo = points[i].ens_ci ? points[i].ens_ci->first : points[i].ens;
        double hi = points[i].ens_ci ? points[i].ens_ci->second : points[i].ens;
        out << to_string(mechanism) << ',' << csv::fmt(scale_grid[i]) << ','
            << csv::fmt(points[i].ens) << ',' << csv::fmt(lo) << ',' << csv::fmt(hi) << '\n';
    }
}

inline void write_frontier_csv(const std::string& path, const std::vector<PortfolioPoint>& points) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << "incentive_coverage,rationing_max,min_interruptible_scale\n";
    for (const PortfolioPoint& pt : points)
        out << csv::fmt(pt.incentive_coverage) << ',' << csv::fmt(pt.rationing_max) << ','
            << csv::fmt(pt.interruptible_scale) << '\n';
}

} // namespace gridflex
