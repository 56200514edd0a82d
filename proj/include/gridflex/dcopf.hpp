#pragma once

// Hourly snapshot dispatch: least-cost DC optimal power flow in the
// B-theta formulation. Variables are bus angles, generator outputs and
// branch flows; each branch contributes one flow-definition row
// f = (theta_from - theta_to) / x * base and each bus one balance row.
// Infeasibility is an answer here, not an error: the scarcity engine
// reads it as "this hour cannot be served as posed".

#include <Eigen/Dense>
#include <cmath>

#include "gridflex/constants.hpp"
#include "gridflex/errors.hpp"
#include "gridflex/grid.hpp"
#include "gridflex/lp.hpp"

namespace gridflex {

struct SnapshotInput {
    const GridCase* grid = nullptr;
    Eigen::VectorXd gen_cap; // MW, one per generator, available this hour
    Eigen::VectorXd load; // MW, one per load bus
};

struct DispatchResult {
    bool feasible = false;
    Eigen::VectorXd dispatch; // MW per generator
    Eigen::VectorXd flows; // MW per branch, positive from->to
    Eigen::VectorXd angles; // radians per bus
    double cost = 0; // $/h at the unperturbed generator costs
};

/// Reserve as the scarcity loop sees it: spare capacity once the currently
/// served load is netted out, credited with any shed already in effect.
inline double total_reserve(const SnapshotInput& in, double restored_shed = 0.0) {
    return in.gen_cap.sum() - in.load.sum() + restored_shed;
}

/// Assembles the dispatch LP for one snapshot. Exposed so tests can hand
/// the exact same problem to an independent oracle solver.
inline lp::Problem build_dcopf_lp(const SnapshotInput& in) {
    const GridCase& gc = *in.grid;
    const int nb = static_cast<int>(gc.buses.size());
    const int ng = static_cast<int>(gc.generators.size());
    const int ne = static_cast<int>(gc.branches.size());
    if (in.gen_cap.size() != ng || in.load.size() != static_cast<Eigen::Index>(gc.load_buses.size()))
        throw DimensionError("dcopf: input vectors do not match the grid case");
    if (!in.gen_cap.allFinite() || !in.load.allFinite())
        throw NumericalError("dcopf: non-finite capacity or load");

    // Column layout: [angles | generation | flows].
    const int off_g = nb;
    const int off_f = nb + ng;
    const int n = nb + ng + ne;
    const int m = ne + nb;

    lp::Problem p;
    p.a = Eigen::MatrixXd::Zero(m, n);
    p.b = Eigen::VectorXd::Zero(m);
    p.c = Eigen::VectorXd::Zero(n);
    p.lo = Eigen::VectorXd::Constant(n, -lp::kInf);
    p.hi = Eigen::VectorXd::Constant(n, lp::kInf);

    const int slack = gc.slack_index();
    p.lo[slack] = 0;
    p.hi[slack] = 0;

    for (int k = 0; k < ng; ++k) {
        p.lo[off_g + k] = 0;
        p.hi[off_g + k] = in.gen_cap[k];
    }

    for (int e = 0; e < ne; ++e) {
        const Branch& br = gc.branches[e];
        const int fi = gc.bus_index(br.from_bus);
        const int ti = gc.bus_index(br.to_bus);
        const double susc = gc.base_mva / br.reactance_pu;
        p.lo[off_f + e] = -br.limit_mw;
        p.hi[off_f + e] = br.limit_mw;
        p.a(e, off_f + e) = 1.0;
        p.a(e, fi) = -susc;
        p.a(e, ti) = susc;
        // Bus balance: generation minus net outflow equals load.
        p.a(ne + fi, off_f + e) -= 1.0;
        p.a(ne + ti, off_f + e) += 1.0;
    }
    for (int k = 0; k < ng; ++k)
        p.a(ne + gc.bus_index(gc.generators[k].bus), off_g + k) += 1.0;
    for (size_t l = 0; l < gc.load_buses.size(); ++l)
        p.b[ne + gc.bus_index(gc.load_buses[l].bus)] += in.load[static_cast<Eigen::Index>(l)];

    // Tiny id-ordered cost perturbation so equal-cost optima resolve to the
    // lowest generator id, without disturbing the 1e-6 optimality contract.
    // Proportional to the cost scale, so scaling all costs rescales the
    // whole objective and the argmin is unchanged.
    double scale = 0;
    for (const Generator& g : gc.generators) scale = std::max(scale, std::abs(g.cost_per_mwh));
    if (scale <= 0) scale = 1;
    for (int k = 0; k < ng; ++k)
        p.c[off_g + k] = gc.generators[k].cost_per_mwh + 1e-9 * scale * (k + 1);
    return p;
}

inline DispatchResult solve_dcopf(const SnapshotInput& in) {
    const GridCase& gc = *in.grid;
    const int nb = static_cast<int>(gc.buses.size());
    const int ng = static_cast<int>(gc.generators.size());
    const int ne = static_cast<int>(gc.branches.size());
    const int off_g = nb;

    lp::Solution s = lp::solve(build_dcopf_lp(in));
    DispatchResult r;
    if (s.status == lp::Status::Infeasible) return r;
    if (s.status != lp::Status::Optimal)
        throw NumericalError("dcopf: dispatch LP did not converge");

    r.feasible = true;
    r.angles = s.x.head(nb);
    r.dispatch = s.x.segment(off_g, ng);
    r.flows = s.x.tail(ne);
    r.cost = 0;
    for (int k = 0; k < ng; ++k) r.cost += gc.generators[k].cost_per_mwh * r.dispatch[k];
    return r;
}

} // namespace gridflex
