#pragma once

// The hourly scarcity loop. Each hour: carry forward yesterday's shed,
// lapse any expired coupon, let the flexibility mechanisms respond in
// priority order, then close any remaining deficit with forced shedding
// in fixed increments, or restore carried shed when the system has
// headroom again. Dispatch feasibility is checked by re-solving the
// snapshot after every change.
//
// Bookkeeping rule: system-wide totals (shed, mechanism levels, reserve)
// are tracked as scalars and are authoritative; per-bus vectors exist for
// dispatch and reporting and agree with the scalars to allocation
// rounding. This keeps the energy totals free of accumulation noise.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gridflex/constants.hpp"
#include "gridflex/dcopf.hpp"
#include "gridflex/errors.hpp"
#include "gridflex/flex.hpp"
#include "gridflex/grid.hpp"
#include "gridflex/metrics.hpp"
#include "gridflex/rng.hpp"
#include "gridflex/timeline.hpp"

namespace gridflex {

struct EngineConfig {
    double p_r_min = 2300.0; // reserve floor, MW
    double shed_step = 25.0; // forced-shed increment, MW
    double interrupt_threshold = 3000.0; // interruptible engagement reserve, MW
    std::vector<MechanismKind> mechanism_order{MechanismKind::InterruptibleLoad,
                                              MechanismKind::LoadRationing,
                                              MechanismKind::IncentiveDR};
    int max_iterations_per_hour = 0; // 0: ceil(total load / shed_step) + 16
    std::uint64_t seed = 0;
    IncentiveModel incentive;
};

inline void validate_engine_config(const EngineConfig& cfg) {
    std::string bad;
    if (!(cfg.p_r_min >= 0)) bad = "p_r_min must be >= 0";
    else if (!(cfg.shed_step > 0)) bad = "shed_step must be > 0";
    else if (!(cfg.interrupt_threshold > 0)) bad = "interrupt_threshold must be > 0";
    else if (cfg.max_iterations_per_hour < 0) bad = "max_iterations_per_hour must be >= 1 (or 0 for automatic)";
    else {
        std::array<int, 3> seen{0, 0, 0};
        for (MechanismKind k : cfg.mechanism_order)
            if (++seen[static_cast<int>(k)] > 1) bad = "mechanism_order repeats a mechanism";
        if (cfg.mechanism_order.empty()) bad = "mechanism_order is empty";
    }
    if (!bad.empty()) throw ValidationError("engine config: " + bad);
}

struct HourInput {
    Eigen::VectorXd load; // counterfactual MW per load bus
    Eigen::VectorXd cap; // available MW per generator
    double commitment_mw = 0; // interruptible commitment this hour
};

struct HourResult {
    int hour = 0;
    bool feasible = false; // last dispatch converged
    double reserve_mw = 0;
    double shed_total_mw = 0;
    double interruptible_mw = 0;
    double rationing_mw = 0;
    double incentive_mw = 0;
    Eigen::VectorXd served_mw; // per load bus
    Eigen::VectorXd forced_shed_mw; // per load bus
    Eigen::VectorXd dr_mw; // per load bus, all mechanisms combined
    Eigen::VectorXd dispatch; // per generator
    double dispatch_cost = 0;
};

struct SimulationState {
    Eigen::VectorXd shed; // carried forced shed per load bus
    double shed_total = 0;
    std::array<ActivationState, 3> act{}; // indexed by MechanismKind
    double incentive_cap = 0; // MW backing the live coupon
    int hour = 0;
    Rng rng{0};
};

struct SimulationReport {
    std::vector<HourResult> hours;
    double ens = 0; // MWh of forced shed only
    std::optional<double> correlation_vs_reference;
};

inline double ens(const SimulationReport& report) { return report.ens; }

namespace detail {

inline int mech_index(MechanismKind k) { return static_cast<int>(k); }

inline const FlexResource* find_resource(const std::vector<FlexResource>& resources,
                                         MechanismKind k) {
    for (const FlexResource& r : resources)
        if (r.kind == k) return &r;
    return nullptr;
}

/// allocate_reduction plus a rounding fix-up so the parts sum to the
/// requested total exactly whenever the caps can hold it.
inline std::vector<double> allocate_exact(double total, const std::vector<double>& base,
                                          const std::vector<double>& caps) {
    std::vector<double> parts = allocate_reduction(total, base, &caps);
    double dealt = 0;
    for (double p : parts) dealt += p;
    double diff = total - dealt;
    if (std::abs(diff) < 1e-6 && !parts.empty()) {
        // Rounding dust only: park it on the bus with the most slack.
        size_t best = 0;
        double best_slack = -1;
        for (size_t i = 0; i < parts.size(); ++i) {
            double slack = diff > 0 ? caps[i] - parts[i] : parts[i];
            if (slack > best_slack) {
                best_slack = slack;
                best = i;
            }
        }
        if (best_slack >= std::abs(diff)) parts[best] += diff;
    }
    return parts;
}

/// Everything run_hour needs to re-evaluate after a state change.
struct HourWorkspace {
    const GridCase* gc = nullptr;
    const HourInput* in = nullptr;
    std::vector<double> res_mw, biz_mw; // sector MW per load bus at counterfactual
    double res0 = 0; // total residential counterfactual MW
    double load_total = 0;
    double cap_total = 0;

    // Current per-bus picture, rebuilt by evaluate().
    std::vector<double> alloc_i, alloc_r, alloc_x;
    Eigen::VectorXd served;
    DispatchResult dispatch;
    bool feasible = false;
};

} // namespace detail

/// One hour of the scarcity loop. Mutates state (carried shed, mechanism
/// activations, RNG position) and returns the hour's outcome.
inline HourResult run_hour(const GridCase& gc, const HourInput& in, SimulationState& state,
                           const std::vector<FlexResource>& resources, const EngineConfig& cfg) {
    using detail::mech_index;
    const int nl = static_cast<int>(gc.load_buses.size());
    const int I = mech_index(MechanismKind::InterruptibleLoad);
    const int R = mech_index(MechanismKind::LoadRationing);
    const int X = mech_index(MechanismKind::IncentiveDR);

    if (in.load.size() != nl || in.cap.size() != static_cast<Eigen::Index>(gc.generators.size()))
        throw DimensionError("run_hour: input vectors do not match the grid case");
    if (state.shed.size() != nl) throw DimensionError("run_hour: state does not match the grid case");

    detail::HourWorkspace ws;
    ws.gc = &gc;
    ws.in = &in;
    ws.load_total = in.load.sum();
    ws.cap_total = in.cap.sum();
    ws.res_mw.resize(nl);
    ws.biz_mw.resize(nl);
    for (int l = 0; l < nl; ++l) {
        const LoadBus& lb = gc.load_buses[l];
        ws.res_mw[l] = lb.w_residential * in.load[l];
        ws.biz_mw[l] = (lb.w_business + lb.w_other) * in.load[l];
        ws.res0 += ws.res_mw[l];
    }

    const FlexResource* res_i = detail::find_resource(resources, MechanismKind::InterruptibleLoad);
    const FlexResource* res_r = detail::find_resource(resources, MechanismKind::LoadRationing);
    const FlexResource* res_x = detail::find_resource(resources, MechanismKind::IncentiveDR);
    double biz0 = 0;
    for (double b : ws.biz_mw) biz0 += b;
    // A mechanism can never hold more MW than its target sector carries.
    const double cap_i = res_i ? std::min(std::max(0.0, in.commitment_mw * res_i->scale), biz0) : 0.0;
    const double cap_r = res_r ? std::max(0.0, res_r->p_max * ws.res0) : 0.0;

    // (a) Carry yesterday's shed, clamped to today's counterfactual load.
    for (int l = 0; l < nl; ++l)
        if (state.shed[l] > in.load[l]) {
            state.shed_total -= state.shed[l] - in.load[l];
            state.shed[l] = in.load[l];
        }
    if (state.shed_total < 0) state.shed_total = 0;

    // A coupon issued last hour has run out its clock; consumption returns
    // unless the deficit check below signals a fresh one.
    if (res_x && state.act[X].active_mw > 0 &&
        state.act[X].hours_active + 1.0 > res_x->t_max)
        state.act[X] = step_activation(*res_x, state.act[X], 0.0, 1.0, state.incentive_cap);
    if (state.act[X].active_mw <= 0) state.incentive_cap = 0;

    // Realized capacity can shrink between hours; levels follow it down.
    state.act[I].active_mw = std::min(state.act[I].active_mw, cap_i);
    state.act[R].active_mw = std::min(state.act[R].active_mw, cap_r);

    // Total reduction can never exceed the load that exists. Trim the
    // voluntary mechanisms (newest first) if a load drop strands them.
    {
        double slack = ws.load_total - state.shed_total;
        for (int k : {X, R, I}) {
            double lvl = state.act[k].active_mw;
            double others = state.act[I].active_mw + state.act[R].active_mw +
                            state.act[X].active_mw - lvl;
            if (others + lvl > slack) state.act[k].active_mw = std::max(0.0, slack - others);
        }
    }

    auto level = [&](int k) { return state.act[k].active_mw; };
    auto reserve_now = [&]() {
        return ws.cap_total - (ws.load_total - state.shed_total - level(I) - level(R) - level(X));
    };
    auto served_total_now = [&]() {
        return ws.load_total - state.shed_total - level(I) - level(R) - level(X);
    };

    // Rebuilds per-bus allocations from the scalar state and re-solves the
    // dispatch snapshot.
    auto evaluate = [&]() {
        std::vector<double> headroom(nl);
        for (int l = 0; l < nl; ++l) headroom[l] = std::max(0.0, in.load[l] - state.shed[l]);
        ws.alloc_i = detail::allocate_exact(level(I), ws.biz_mw, headroom);
        for (int l = 0; l < nl; ++l) headroom[l] = std::max(0.0, headroom[l] - ws.alloc_i[l]);
        ws.alloc_r = detail::allocate_exact(level(R), ws.res_mw, headroom);
        for (int l = 0; l < nl; ++l) headroom[l] = std::max(0.0, headroom[l] - ws.alloc_r[l]);
        ws.alloc_x = detail::allocate_exact(level(X), ws.res_mw, headroom);

        ws.served.resize(nl);
        for (int l = 0; l < nl; ++l)
            ws.served[l] = std::max(0.0, in.load[l] - state.shed[l] - ws.alloc_i[l] -
                                             ws.alloc_r[l] - ws.alloc_x[l]);
        SnapshotInput snap;
        snap.grid = &gc;
        snap.gen_cap = in.cap;
        snap.load = ws.served;
        ws.dispatch = solve_dcopf(snap);
        ws.feasible = ws.dispatch.feasible;
    };
    evaluate();

    const double floor = cfg.p_r_min;
    auto deficit = [&]() { return !ws.feasible || reserve_now() < floor - kFeasTolMw; };

    // Finds the largest release (level decrease) up to want_mw that keeps
    // the snapshot dispatchable, by halving on failure.
    auto feasible_release = [&](int k, double want_mw) {
        double delta = want_mw;
        for (int tries = 0; tries < 24 && delta > kAllocEps; ++tries) {
            double saved = state.act[k].active_mw;
            state.act[k].active_mw = std::max(0.0, saved - delta);
            evaluate();
            bool ok = ws.feasible && reserve_now() >= floor - kFeasTolMw;
            state.act[k].active_mw = saved;
            if (ok) return delta;
            delta *= 0.5;
        }
        return 0.0;
    };

    // (b)-(c) Mechanisms respond in priority order. Raising is driven by
    // the measured deficit; each decision is one ramp- and cap-limited
    // step of the activation law.
    for (MechanismKind kind : cfg.mechanism_order) {
        const int k = mech_index(kind);
        double reserve = reserve_now();
        double request = 0;
        double realized = 0;

        if (kind == MechanismKind::InterruptibleLoad) {
            if (!res_i || (cap_i <= 0 && level(I) <= 0)) continue;
            realized = std::min(cap_i, level(I) + std::max(0.0, served_total_now()));
            bool involuntary = state.shed_total > kAllocEps || level(R) > kAllocEps;
            if (!ws.feasible)
                request = realized;
            else if (interruptible_trigger(reserve, involuntary, cfg.interrupt_threshold))
                request = std::max(0.0, cfg.interrupt_threshold - reserve);
            else if (level(I) > 0) {
                double want = std::min({level(I), reserve - cfg.interrupt_threshold,
                                        -res_i->r_min * realized});
                request = -feasible_release(k, std::max(0.0, want));
            }
            if (request == 0 && level(I) <= 0) continue;
            state.act[k] = step_activation(*res_i, state.act[k], request, 1.0, realized);
        } else if (kind == MechanismKind::LoadRationing) {
            if (!res_r || (cap_r <= 0 && level(R) <= 0)) continue;
            realized = std::min(cap_r, level(R) + std::max(0.0, served_total_now()));
            if (!ws.feasible)
                request = realized;
            else if (reserve < floor - kFeasTolMw)
                request = floor - reserve;
            else if (state.shed_total <= kAllocEps && level(R) > 0) {
                // Rationing lifts only once forced shedding has cleared.
                double want = std::min({level(R), reserve - floor, -res_r->r_min * realized});
                request = -feasible_release(k, std::max(0.0, want));
            }
            if (request == 0 && level(R) <= 0) continue;
            state.act[k] = step_activation(*res_r, state.act[k], request, 1.0, realized);
        } else {
            if (!res_x) continue;
            bool want_signal = deficit() && cfg.incentive.coverage > 0 && ws.res0 > 0;
            if (want_signal) {
                double already = level(R);
                for (int l = 0; l < nl; ++l)
                    already += state.shed[l] * gc.load_buses[l].w_residential;
                double existing_frac = std::clamp(already / ws.res0, 0.0, 1.0);
                double sampled = sample_incentive_capacity(cfg.incentive, ws.res0, existing_frac,
                                                           state.rng);
                realized = std::min(sampled, level(X) + std::max(0.0, served_total_now()));
                state.incentive_cap = realized;
                request = ws.feasible ? std::max(0.0, floor - reserve) : realized;
                state.act[k] = step_activation(*res_x, state.act[k], request, 1.0, realized);
            } else if (level(X) > 0) {
                // Live coupon, no fresh signal: hold (or decay, per the law).
                state.act[k] = step_activation(*res_x, state.act[k], 0.0, 1.0, state.incentive_cap);
            } else {
                continue;
            }
        }
        if (state.act[k].active_mw > 0) {
            if (request > 0 || !state.act[k].active_since) state.act[k].active_since = state.hour;
        }
        evaluate();
    }

    // (d) Forced shedding in fixed increments until the snapshot clears
    // and the reserve floor holds.
    int max_iter = cfg.max_iterations_per_hour > 0
                       ? cfg.max_iterations_per_hour
                       : static_cast<int>(std::ceil(ws.load_total / cfg.shed_step)) + 16;
    int iter = 0;
    while (deficit() && iter < max_iter) {
        double served_scalar = served_total_now();
        if (served_scalar <= kAllocEps) break; // nothing left to shed

        // With a clean dispatch the shortfall is pure reserve arithmetic:
        // jump the whole gap at once, then re-check.
        int steps = 1;
        if (ws.feasible) {
            double gap = floor - reserve_now();
            steps = std::max(1, static_cast<int>(std::ceil((gap - kFeasTolMw) / cfg.shed_step)));
            steps = std::min(steps, max_iter - iter);
        }
        double want = std::min(steps * cfg.shed_step, served_scalar);
        std::vector<double> served_v(nl), parts;
        for (int l = 0; l < nl; ++l) served_v[l] = ws.served[l];
        parts = detail::allocate_exact(want, served_v, served_v);
        for (int l = 0; l < nl; ++l)
            state.shed[l] = std::min(in.load[l], state.shed[l] + parts[l]);
        state.shed_total += want;
        iter += steps;
        evaluate();
    }
    if (deficit()) {
        if (!ws.feasible && served_total_now() <= kAllocEps)
            throw NonConvergence("hour " + std::to_string(state.hour) +
                                 ": dispatch infeasible even with all load shed");
        if (iter >= max_iter)
            throw NonConvergence("hour " + std::to_string(state.hour) + ": shortfall of " +
                                 csv::fmt(floor - reserve_now()) + " MW remains after " +
                                 std::to_string(iter) + " shed iterations");
        throw NonConvergence("hour " + std::to_string(state.hour) +
                             ": cannot reach the reserve floor; total capacity " +
                             csv::fmt(ws.cap_total) + " MW is below p_r_min " + csv::fmt(floor));
    }

    // (e) Restoration: hand carried shed back while the floor and the
    // dispatch both survive.
    while (state.shed_total > kAllocEps && ws.feasible &&
           reserve_now() - cfg.shed_step >= floor - kFeasTolMw && iter < max_iter) {
        double give = std::min(cfg.shed_step, state.shed_total);
        Eigen::VectorXd saved_shed = state.shed;
        double saved_total = state.shed_total;
        std::vector<double> shed_v(nl);
        for (int l = 0; l < nl; ++l) shed_v[l] = state.shed[l];
        std::vector<double> parts = detail::allocate_exact(give, shed_v, shed_v);
        for (int l = 0; l < nl; ++l) state.shed[l] = std::max(0.0, state.shed[l] - parts[l]);
        state.shed_total = std::max(0.0, state.shed_total - give);
        evaluate();
        if (!ws.feasible || reserve_now() < floor - kFeasTolMw) {
            state.shed = saved_shed;
            state.shed_total = saved_total;
            evaluate();
            break;
        }
        ++iter;
    }

    HourResult hr;
    hr.hour = state.hour;
    hr.feasible = ws.feasible;
    hr.reserve_mw = reserve_now();
    hr.shed_total_mw = state.shed_total;
    hr.interruptible_mw = level(I);
    hr.rationing_mw = level(R);
    hr.incentive_mw = level(X);
    hr.served_mw = ws.served;
    hr.forced_shed_mw = state.shed;
    hr.dr_mw.resize(nl);
    for (int l = 0; l < nl; ++l) hr.dr_mw[l] = ws.alloc_i[l] + ws.alloc_r[l] + ws.alloc_x[l];
    hr.dispatch = ws.dispatch.dispatch;
    hr.dispatch_cost = ws.dispatch.cost;
    ++state.hour;
    return hr;
}

/// Folds run_hour over the whole timeline. Bit-reproducible for a given
/// config seed; safe to run concurrently against other instances.
inline SimulationReport run_simulation(const GridCase& gc, const ScenarioTimeline& tl,
                                       const std::vector<FlexResource>& resources,
                                       const EngineConfig& cfg) {
    validate_engine_config(cfg);
    if (tl.hours() < 1) throw ValidationError("run_simulation: empty timeline");

    SimulationState state;
    state.shed = Eigen::VectorXd::Zero(gc.load_buses.size());
    state.hour = tl.hour_ids.front();
    state.rng = Rng(cfg.seed);

    SimulationReport report;
    report.hours.reserve(tl.hours());
    for (int t = 0; t < tl.hours(); ++t) {
        HourInput in;
        in.load = tl.load.row(t).transpose();
        in.cap = tl.cap.row(t).transpose();
        in.commitment_mw = tl.commitment[t];
        report.hours.push_back(run_hour(gc, in, state, resources, cfg));
        report.ens += report.hours.back().shed_total_mw;
    }

    if (tl.reference_shed) {
        // The reference records total curtailment, so compare against
        // forced shed plus the contracted interruptible reduction.
        std::vector<double> sim(report.hours.size()), ref(report.hours.size());
        for (size_t t = 0; t < report.hours.size(); ++t) {
            sim[t] = report.hours[t].shed_total_mw + report.hours[t].interruptible_mw;
            ref[t] = (*tl.reference_shed)[static_cast<Eigen::Index>(t)];
        }
        try {
            report.correlation_vs_reference = pearson(sim, ref);
        } catch (const DegenerateSeries&) {
            report.correlation_vs_reference.reset();
        }
    }
    return report;
}

inline void write_report_csv(const std::string& path, const SimulationReport& report) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << "hour_index,served_mw,forced_shed_mw,interruptible_mw,rationing_mw,incentive_mw,reserve_mw\n";
    for (const HourResult& h : report.hours)
        out << h.hour << ',' << csv::fmt(h.served_mw.sum()) << ',' << csv::fmt(h.shed_total_mw)
            << ',' << csv::fmt(h.interruptible_mw) << ',' << csv::fmt(h.rationing_mw) << ','
            << csv::fmt(h.incentive_mw) << ',' << csv::fmt(h.reserve_mw) << '\n';
}

} // namespace gridflex
