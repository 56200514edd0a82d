#pragma once

// Demand-flexibility resources. One general activation law covers all
// three mechanisms: per-hour change bounded by ramp fractions of the
// realized capacity, the level bounded by [0, capacity], and an optional
// maximum activation duration after which the resource decays back to
// zero unless re-signaled. Mechanisms differ only in parameters and in
// where their realized capacity comes from (committed MW timeseries,
// fraction of residential load, or a stochastic sample).

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "gridflex/constants.hpp"
#include "gridflex/errors.hpp"
#include "gridflex/rng.hpp"

namespace gridflex {

enum class MechanismKind { InterruptibleLoad, LoadRationing, IncentiveDR };

inline const char* to_string(MechanismKind k) {
    switch (k) {
        case MechanismKind::InterruptibleLoad: return "interruptible";
        case MechanismKind::LoadRationing: return "rationing";
        case MechanismKind::IncentiveDR: return "incentive";
    }
    return "?";
}

struct FlexResource {
    MechanismKind kind = MechanismKind::InterruptibleLoad;
    double r_min = -1.0; // most negative ramp, fraction of capacity per hour
    double r_max = 1.0; // most positive ramp, ditto
    double p_max = 0; // rationing: fraction of residential; others: unused
    double t_min = 0; // hours a started activation must persist
    double t_max = std::numeric_limits<double>::infinity(); // hours before forced decay
    double scale = 1.0; // interruptible multiplier / coverage fraction
};

struct ActivationState {
    double active_mw = 0;
    std::optional<int> active_since; // hour index, set by the engine
    double last_rate = 0; // MW/h granted in the latest step
    double hours_active = 0; // duration clock for t_min / t_max
};

/// Stock parameterization for each mechanism.
inline FlexResource default_resource(MechanismKind kind) {
    FlexResource r;
    r.kind = kind;
    switch (kind) {
        case MechanismKind::InterruptibleLoad:
            r.r_min = -1.0;
            r.r_max = 0.5;
            break;
        case MechanismKind::LoadRationing:
            r.r_min = -0.1;
            r.r_max = 0.1;
            r.p_max = 0.5; // cap as a fraction of residential load
            break;
        case MechanismKind::IncentiveDR:
            r.r_min = -1.0;
            r.r_max = 1.0;
            r.t_max = 1.0; // a coupon works for one hour
            break;
    }
    return r;
}

/// Interruptible load engages early: below its own reserve threshold, or
/// whenever involuntary measures are already in effect.
inline bool interruptible_trigger(double reserve_mw, bool shedding_or_rationing_active,
                                  double threshold_mw) {
    if (!(threshold_mw > 0)) throw ModelError("interruptible trigger threshold must be > 0");
    return reserve_mw < threshold_mw || shedding_or_rationing_active;
}

/// Advances one activation by one step. requested_delta is the desired MW
/// change over dt; the grant is ramp- and capacity-clamped. A positive
/// request counts as a re-signal and restarts the duration clock.
inline ActivationState step_activation(const FlexResource& res, const ActivationState& state,
                                       double requested_delta, double dt, double realized_cap) {
    if (state.active_mw < 0) throw InvalidState("activation level is negative");
    if (!(dt > 0) || realized_cap < 0) throw InvalidState("bad step arguments");

    const double lo_rate = res.r_min * realized_cap;
    const double hi_rate = res.r_max * realized_cap;
    double rate = std::clamp(requested_delta / dt, lo_rate, hi_rate);

    const bool resignal = requested_delta > 0;
    if (!resignal && state.active_mw > 0 && state.hours_active + dt > res.t_max) {
        // Out of contract time: head for zero as fast as the ramp allows.
        rate = lo_rate;
    } else if (rate < 0 && state.hours_active < res.t_min) {
        rate = 0; // must stay on until the minimum duration is served
    }

    ActivationState next = state;
    next.active_mw = std::clamp(state.active_mw + rate * dt, 0.0, realized_cap);
    next.last_rate = (next.active_mw - state.active_mw) / dt;
    if (next.active_mw <= 0) {
        next.active_mw = 0;
        next.active_since.reset();
        next.hours_active = 0;
    } else if (resignal || state.active_mw <= 0) {
        next.hours_active = dt; // clock restarts on signal or fresh start
    } else {
        next.hours_active = state.hours_active + dt;
    }
    return next;
}

struct IncentiveModel {
    double coverage = 0; // fraction of residential customers enrolled
    double active_share = 0.5; // split between the two participant groups
    double active_mean = 0.2, active_sd = 0.05; // per-customer reduction fraction
    double inactive_mean = 0.02, inactive_sd = 0.01;
};

/// Draws the MW a coupon signal would free up this hour. Consumes exactly
/// two Gaussian draws (active group first) so replications stay aligned.
/// Each group draw is clamped into [0,1]; load already curtailed by other
/// means discounts the result linearly.
inline double sample_incentive_capacity(const IncentiveModel& m, double residential_mw,
                                        double existing_reduction_frac, Rng& rng) {
    auto frac_ok = [](double f) { return f >= 0.0 && f <= 1.0; };
    if (!frac_ok(m.coverage) || !frac_ok(m.active_share) || m.active_sd < 0 ||
        m.inactive_sd < 0)
        throw ModelError("incentive model parameters out of range");
    if (!frac_ok(existing_reduction_frac) || residential_mw < 0)
        throw ModelError("incentive sampling inputs out of range");

    double draw_active = std::clamp(rng.gauss(m.active_mean, m.active_sd), 0.0, 1.0);
    double draw_inactive = std::clamp(rng.gauss(m.inactive_mean, m.inactive_sd), 0.0, 1.0);
    double per_customer = m.active_share * draw_active + (1.0 - m.active_share) * draw_inactive;
    double mw = residential_mw * m.coverage * per_customer * (1.0 - existing_reduction_frac);
    return std::clamp(mw, 0.0, m.coverage * residential_mw);
}

/// Splits a system-wide reduction across buses in proportion to each
/// bus's target-sector MW. A bus never absorbs more than its own cap
/// (by default the sector MW itself; the engine passes remaining served
/// load instead); overflow from capped buses re-spreads proportionally
/// over the rest. Total delivered = min(request, sum of caps, sector sum).
inline std::vector<double> allocate_reduction(double total_mw, const std::vector<double>& sector_mw,
                                              const std::vector<double>* cap_mw = nullptr) {
    const size_t n = sector_mw.size();
    std::vector<double> out(n, 0.0);
    if (total_mw <= 0 || n == 0) return out;
    auto cap = [&](size_t i) {
        double c = cap_mw ? std::min((*cap_mw)[i], sector_mw[i]) : sector_mw[i];
        return std::max(0.0, c);
    };
    double want = 0;
    for (size_t i = 0; i < n; ++i) want += cap(i);
    double remaining = std::min(total_mw, want);

    std::vector<char> capped(n, 0);
    while (remaining > kAllocEps) {
        // Weight by sector share among the still-open buses.
        double open_weight = 0;
        for (size_t i = 0; i < n; ++i)
            if (!capped[i] && cap(i) - out[i] > kAllocEps)
                open_weight += std::max(0.0, sector_mw[i]);
        if (open_weight <= kAllocEps) break;
        bool pinned = false;
        double dealt = 0;
        for (size_t i = 0; i < n; ++i) {
            if (capped[i] || cap(i) - out[i] <= kAllocEps) continue;
            double give = remaining * std::max(0.0, sector_mw[i]) / open_weight;
            double room = cap(i) - out[i];
            if (give >= room - kAllocEps) {
                give = room;
                capped[i] = 1;
                pinned = true;
            }
            out[i] += give;
            dealt += give;
        }
        remaining -= dealt;
        if (!pinned) break; // nobody hit a cap: proportional split was final
    }
    return out;
}

} // namespace gridflex
