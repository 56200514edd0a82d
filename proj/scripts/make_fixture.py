#!/usr/bin/env python3
"""Generates the bundled 9-bus 72-hour fixture CSVs under data/fixture/.

The scenario is engineered, not sampled: a trapezoidal load wave (8000 to
12200 MW) meets a two-generator derating window so that the capacity gap
  gap(t) = load(t) + 2300 - caps(t)
is an exact triangle, peaking at 2000 MW at hour 33, sloping 250 MW/h,
positive over hours 26..40. Every load and capacity value is an integer
and every gap is a multiple of the 25 MW shed step, so the closed-form
shed oracle sums to exactly 16000 MWh with zero rounding slack.

One corridor (branch 3-7) gets a limit that the raw counterfactual flow
exceeds only at the top of the peak; all operating points the engine
actually visits (after shedding or demand response) stay below it, which
keeps the gap analytics exact while the fixture still carries a
congestible corridor for the relaxed-variant contrast.

Run from the repository root:  python3 scripts/make_fixture.py
"""

import os
import numpy as np

OUT = os.path.join(os.path.dirname(__file__), "..", "data", "fixture")

P_R_MIN = 2300
STEP = 25
GAP_PEAK = 2000
GAP_SLOPE = 250
PEAK_HOUR = 33
HOURS = 72

BUSES = [
    # id, zone, slack
    (1, "north", 1),
    (2, "north", 0),
    (3, "south", 0),
    (4, "north", 0),
    (5, "north", 0),
    (6, "south", 0),
    (7, "south", 0),
    (8, "west", 0),
    (9, "west", 0),
]

# A single 9-cycle: 1-4-9-8-7-3-6-2-5-1. Equal reactances; limits set below.
RING = [(1, 4), (4, 9), (9, 8), (8, 7), (7, 3), (3, 6), (6, 2), (2, 5), (5, 1)]
REACTANCE = 0.03
WIDE_LIMIT = 6000
RELAXED_LIMIT = 99999

GENS = [
    # id, bus, p_max, cost
    (1, 1, 6000, 10),
    (2, 2, 5000, 25),
    (3, 3, 4000, 40),
]

LOADS = [
    # bus, share(%), w_res, w_biz, w_oth
    (4, 22, 0.35, 0.45, 0.20),
    (5, 20, 0.30, 0.50, 0.20),
    (6, 18, 0.35, 0.40, 0.25),
    (7, 14, 0.30, 0.45, 0.25),
    (8, 13, 0.35, 0.40, 0.25),
    (9, 13, 0.30, 0.50, 0.20),
]

COMMITTED = 700  # interruptible commitment, flat


def total_load(t):
    if t <= 19:
        return 8000
    if t <= 33:
        return 8000 + 300 * (t - 19)
    if t <= 47:
        return 12200 - 300 * (t - 33)
    return 8000


def gap(t):
    return max(0, GAP_PEAK - GAP_SLOPE * abs(t - PEAK_HOUR))


def caps(t):
    g = gap(t)
    if g > 0:
        total = total_load(t) + P_R_MIN - g
        g1, g3 = 6000, 2200
        g2 = total - g1 - g3
    else:
        g1, g2, g3 = 6000, 5000, 4000
    assert 0 <= g2 <= 5000, (t, g2)
    return {1: g1, 2: g2, 3: g3}


def merit_dispatch(demand, cap):
    out = {}
    left = demand
    for gid, _, _, _ in GENS:
        take = min(left, cap[gid])
        out[gid] = take
        left -= take
    assert left <= 1e-9, (demand, cap)
    return out


def dc_flows(inj_by_bus):
    """Bus injections (MW) -> branch flows (MW) for the ring, x equal."""
    n = len(BUSES)
    ids = [b[0] for b in BUSES]
    pos = {bid: i for i, bid in enumerate(ids)}
    b_mat = np.zeros((n, n))
    susc = 100.0 / REACTANCE
    for f, t in RING:
        i, j = pos[f], pos[t]
        b_mat[i, i] += susc
        b_mat[j, j] += susc
        b_mat[i, j] -= susc
        b_mat[j, i] -= susc
    p = np.array([inj_by_bus.get(bid, 0.0) for bid in ids])
    theta = np.zeros(n)
    keep = list(range(1, n))  # bus 1 (index 0) is the angle reference
    theta[keep] = np.linalg.solve(b_mat[np.ix_(keep, keep)], p[keep])
    return {(f, t): (theta[pos[f]] - theta[pos[t]]) * susc for f, t in RING}


def hour_flows(t, served_total):
    cap = caps(t)
    disp = merit_dispatch(served_total, cap)
    scale = served_total / total_load(t)
    inj = {gid_bus[1]: disp[gid_bus[0]] for gid_bus in [(g[0], g[1]) for g in GENS]}
    for bus, share, *_ in LOADS:
        inj[bus] = inj.get(bus, 0.0) - total_load(t) * share / 100.0 * scale
    return dc_flows(inj)


def main():
    os.makedirs(OUT, exist_ok=True)

    # Pick the corridor limit: above every flow the engine can visit
    # (served load never exceeds load - gap), below the raw peak flow.
    corridor = (7, 3)
    visited_max = 0.0
    raw_max = 0.0
    for t in range(HOURS):
        served = total_load(t) - gap(t)
        visited_max = max(visited_max, abs(hour_flows(t, served)[corridor]))
        raw_max = max(raw_max, abs(hour_flows(t, total_load(t))[corridor]))
    assert raw_max - visited_max > 100, (visited_max, raw_max)
    limit_37 = int(round((visited_max + raw_max) / 2 / 50.0)) * 50
    print(f"corridor 7-3: visited max {visited_max:.1f} MW, raw max {raw_max:.1f} MW, "
          f"limit {limit_37} MW")

    def write(name, header, rows):
        with open(os.path.join(OUT, name), "w") as f:
            f.write(header + "\n")
            for r in rows:
                f.write(",".join(str(v) for v in r) + "\n")

    write("buses.csv", "id,zone,is_slack", BUSES)

    def branch_rows(limit_fn):
        return [(f, t, REACTANCE, limit_fn((f, t))) for f, t in RING]

    write("branches.csv", "from_bus,to_bus,reactance_pu,limit_mw",
          branch_rows(lambda e: limit_37 if e == corridor else WIDE_LIMIT))
    write("branches_relaxed.csv", "from_bus,to_bus,reactance_pu,limit_mw",
          branch_rows(lambda e: RELAXED_LIMIT))
    write("generators.csv", "id,bus,p_max_mw,cost_per_mwh", GENS)
    write("loads.csv", "bus,w_residential,w_business,w_other",
          [(b, r, z, o) for b, _, r, z, o in LOADS])

    write("timeline.csv", "hour_index,bus,counterfactual_load_mw",
          [(t, bus, total_load(t) * share // 100)
           for t in range(HOURS) for bus, share, *_ in LOADS])
    write("capacity.csv", "hour_index,generator_id,available_mw",
          [(t, gid, caps(t)[gid]) for t in range(HOURS) for gid in (1, 2, 3)])
    write("capacity_adequate.csv", "hour_index,generator_id,available_mw",
          [(t, gid, pmax) for t in range(HOURS) for gid, _, pmax, _ in GENS])

    write("interruptible_commitment.csv", "hour_index,committed_mw",
          [(t, COMMITTED) for t in range(HOURS)])

    # The "observed event" series: the shed profile smeared one hour wide
    # plus a small deterministic wobble, so the correlation check against
    # the simulated series is high but not degenerate.
    shed = [gap(t) for t in range(HOURS)]
    ref = []
    for t in range(HOURS):
        prev = shed[t - 1] if t > 0 else 0
        nxt = shed[t + 1] if t + 1 < HOURS else 0
        v = 0.7 * shed[t] + 0.2 * prev + 0.1 * nxt
        if v > 0:
            v += 60.0 * np.sin(1.7 * t)
        ref.append(max(0, int(round(v))))
    write("reference_shed.csv", "hour_index,total_shed_mw",
          list(enumerate(ref)))

    # Noiseless sector profiles: totals built from the fracs after rounding
    # them to file precision, so the written system is exactly consistent.
    r_max, b_max, o_max = 5200, 6800, 2400
    rows = []
    for t in range(HOURS):
        r = round(0.55 + 0.35 * np.sin(2 * np.pi * (t - 8) / 24.0), 6)
        b = round(0.60 + 0.30 * np.sin(2 * np.pi * (t - 14) / 24.0), 6)
        o = round(0.70 + 0.10 * np.sin(2 * np.pi * (t - 2) / 12.0), 6)
        total = r_max * r + b_max * b + o_max * o
        rows.append((t, f"{r:.6f}", f"{b:.6f}", f"{o:.6f}", f"{total:.10g}"))
    write("profiles.csv", "hour_index,r_frac,b_frac,o_frac,total_mw", rows)

    oracle = sum(-(-gap(t) // STEP) * STEP for t in range(HOURS))
    print(f"gap-oracle ENS: {oracle} MWh over hours "
          f"{min(t for t in range(HOURS) if gap(t) > 0)}.."
          f"{max(t for t in range(HOURS) if gap(t) > 0)}")
    assert oracle == 16000, oracle
    peak_scale = GAP_PEAK / COMMITTED
    print(f"peak-gap frontier scale at zero rationing: {peak_scale:.6f}")


if __name__ == "__main__":
    main()
