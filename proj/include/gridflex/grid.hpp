#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "gridflex/constants.hpp"
#include "gridflex/csv.hpp"
#include "gridflex/errors.hpp"

namespace gridflex {

struct Bus {
    int id = 0;
    std::string zone;
    bool is_slack = false;
};

struct Branch {
    int from_bus = 0;
    int to_bus = 0;
    double reactance_pu = 0;
    double limit_mw = 0;
};

struct Generator {
    int id = 0;
    int bus = 0;
    double p_max_mw = 0; // installed capacity; hourly availability comes from the timeline
    double cost_per_mwh = 0;
};

/// Sector split of one load bus. Weights are static fractions of the
/// counterfactual load; they must sum to 1.
struct LoadBus {
    int bus = 0;
    double w_residential = 0;
    double w_business = 0;
    double w_other = 0;
};

/// Immutable after construction; safe to share read-only across scenario
/// evaluations running in parallel.
struct GridCase {
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<Generator> generators;
    std::vector<LoadBus> load_buses;
    double base_mva = 100.0;

    int bus_index(int id) const {
        auto it = bus_index_.find(id);
        return it == bus_index_.end() ? -1 : it->second;
    }
    int load_index(int bus_id) const {
        auto it = load_index_.find(bus_id);
        return it == load_index_.end() ? -1 : it->second;
    }
    int slack_index() const { return slack_index_; }

    /// Rebuild id->index maps; called by the loader after construction.
    void reindex() {
        bus_index_.clear();
        load_index_.clear();
        slack_index_ = -1;
        for (size_t i = 0; i < buses.size(); ++i) {
            bus_index_.emplace(buses[i].id, static_cast<int>(i));
            if (buses[i].is_slack && slack_index_ < 0) slack_index_ = static_cast<int>(i);
        }
        for (size_t i = 0; i < load_buses.size(); ++i)
            load_index_.emplace(load_buses[i].bus, static_cast<int>(i));
    }

private:
    std::unordered_map<int, int> bus_index_;
    std::unordered_map<int, int> load_index_;
    int slack_index_ = -1;
};

enum class ViolationCode {
    DuplicateBusId,
    MultipleSlack,
    NoSlack,
    UnknownBusRef,
    SelfLoopBranch,
    NonPositiveReactance,
    NonPositiveLimit,
    NegativeCapacity,
    NegativeCost,
    DuplicateGeneratorId,
    DuplicateLoadBus,
    WeightOutOfRange,
    WeightSumViolation,
    Disconnected,
    NonPositiveBaseMva,
};

struct Violation {
    ViolationCode code;
    std::string message;
};

inline const char* to_string(ViolationCode c) {
    switch (c) {
        case ViolationCode::DuplicateBusId: return "DuplicateBusId";
        case ViolationCode::MultipleSlack: return "MultipleSlack";
        case ViolationCode::NoSlack: return "NoSlack";
        case ViolationCode::UnknownBusRef: return "UnknownBusRef";
        case ViolationCode::SelfLoopBranch: return "SelfLoopBranch";
        case ViolationCode::NonPositiveReactance: return "NonPositiveReactance";
        case ViolationCode::NonPositiveLimit: return "NonPositiveLimit";
        case ViolationCode::NegativeCapacity: return "NegativeCapacity";
        case ViolationCode::NegativeCost: return "NegativeCost";
        case ViolationCode::DuplicateGeneratorId: return "DuplicateGeneratorId";
        case ViolationCode::DuplicateLoadBus: return "DuplicateLoadBus";
        case ViolationCode::WeightOutOfRange: return "WeightOutOfRange";
        case ViolationCode::WeightSumViolation: return "WeightSumViolation";
        case ViolationCode::Disconnected: return "Disconnected";
        case ViolationCode::NonPositiveBaseMva: return "NonPositiveBaseMva";
    }
    return "?";
}

/// Checks every static invariant; returns all violations rather than
/// stopping at the first.
inline std::vector<Violation> validate_case(const GridCase& gc) {
    std::vector<Violation> v;
    auto add = [&](ViolationCode c, std::string msg) { v.push_back({c, std::move(msg)}); };

    std::unordered_map<int, int> bus_pos;
    int n_slack = 0;
    for (const Bus& b : gc.buses) {
        if (bus_pos.count(b.id))
            add(ViolationCode::DuplicateBusId, "duplicate bus id " + std::to_string(b.id));
        else
            bus_pos.emplace(b.id, static_cast<int>(bus_pos.size()));
        if (b.is_slack) ++n_slack;
    }
    if (n_slack > 1) add(ViolationCode::MultipleSlack, "case declares " + std::to_string(n_slack) + " slack buses");
    if (n_slack == 0 && !gc.buses.empty()) add(ViolationCode::NoSlack, "case declares no slack bus");

    for (size_t i = 0; i < gc.branches.size(); ++i) {
        const Branch& br = gc.branches[i];
        std::string tag = "branch " + std::to_string(i) + " (" + std::to_string(br.from_bus) +
                          "->" + std::to_string(br.to_bus) + ")";
        if (!bus_pos.count(br.from_bus))
            add(ViolationCode::UnknownBusRef, tag + " references missing bus " + std::to_string(br.from_bus));
        if (!bus_pos.count(br.to_bus))
            add(ViolationCode::UnknownBusRef, tag + " references missing bus " + std::to_string(br.to_bus));
        if (br.from_bus == br.to_bus) add(ViolationCode::SelfLoopBranch, tag + " is a self-loop");
        if (!(br.reactance_pu > 0)) add(ViolationCode::NonPositiveReactance, tag + " has reactance " + csv::fmt(br.reactance_pu));
        if (!(br.limit_mw > 0)) add(ViolationCode::NonPositiveLimit, tag + " has limit " + csv::fmt(br.limit_mw));
    }

    std::unordered_set<int> gen_ids;
    for (const Generator& g : gc.generators) {
        std::string tag = "generator " + std::to_string(g.id);
        if (!gen_ids.insert(g.id).second) add(ViolationCode::DuplicateGeneratorId, "duplicate generator id " + std::to_string(g.id));
        if (!bus_pos.count(g.bus))
            add(ViolationCode::UnknownBusRef, tag + " references missing bus " + std::to_string(g.bus));
        if (g.p_max_mw < 0) add(ViolationCode::NegativeCapacity, tag + " has p_max " + csv::fmt(g.p_max_mw));
        if (g.cost_per_mwh < 0) add(ViolationCode::NegativeCost, tag + " has cost " + csv::fmt(g.cost_per_mwh));
    }

    std::unordered_set<int> load_seen;
    for (const LoadBus& lb : gc.load_buses) {
        std::string tag = "load bus " + std::to_string(lb.bus);
        if (!load_seen.insert(lb.bus).second) add(ViolationCode::DuplicateLoadBus, "duplicate load row for bus " + std::to_string(lb.bus));
        if (!bus_pos.count(lb.bus))
            add(ViolationCode::UnknownBusRef, tag + " references missing bus " + std::to_string(lb.bus));
        for (double w : {lb.w_residential, lb.w_business, lb.w_other})
            if (!(w >= 0.0 && w <= 1.0)) {
                add(ViolationCode::WeightOutOfRange, tag + " has weight " + csv::fmt(w) + " outside [0,1]");
                break;
            }
        double sum = lb.w_residential + lb.w_business + lb.w_other;
        if (std::abs(sum - 1.0) > kWeightSumTol)
            add(ViolationCode::WeightSumViolation, tag + " weights sum to " + csv::fmt(sum));
    }

    if (!(gc.base_mva > 0))
        add(ViolationCode::NonPositiveBaseMva, "base_mva " + csv::fmt(gc.base_mva));

    // Connectivity over branch endpoints (undirected).
    if (!gc.buses.empty()) {
        std::vector<std::vector<int>> adj(gc.buses.size());
        for (const Branch& br : gc.branches) {
            auto fi = bus_pos.find(br.from_bus);
            auto ti = bus_pos.find(br.to_bus);
            if (fi == bus_pos.end() || ti == bus_pos.end()) continue;
            adj[fi->second].push_back(ti->second);
            adj[ti->second].push_back(fi->second);
        }
        std::vector<char> seen(gc.buses.size(), 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        size_t count = 1;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int w : adj[u])
                if (!seen[w]) {
                    seen[w] = 1;
                    ++count;
                    stack.push_back(w);
                }
        }
        if (count != gc.buses.size())
            add(ViolationCode::Disconnected,
                "network is disconnected: reached " + std::to_string(count) + " of " +
                    std::to_string(gc.buses.size()) + " buses");
    }

    return v;
}

inline GridCase load_grid_case(const std::string& bus_path, const std::string& branch_path,
                               const std::string& gen_path, const std::string& load_path,
                               double base_mva = 100.0) {
    GridCase gc;
    gc.base_mva = base_mva;

    csv::Table buses = csv::read(bus_path);
    int c_id = csv::column(buses, "id");
    int c_zone = csv::column(buses, "zone");
    int c_slack = csv::column(buses, "is_slack");
    int c_base = csv::column_opt(buses, "base_mva");
    for (size_t r = 0; r < buses.rows.size(); ++r) {
        Bus b;
        b.id = static_cast<int>(csv::cell_int(buses, r, c_id));
        b.zone = buses.rows[r][c_zone];
        b.is_slack = csv::cell_bool01(buses, r, c_slack);
        if (c_base >= 0 && r == 0) gc.base_mva = csv::cell_double(buses, r, c_base);
        gc.buses.push_back(std::move(b));
    }

    csv::Table branches = csv::read(branch_path);
    int c_from = csv::column(branches, "from_bus");
    int c_to = csv::column(branches, "to_bus");
    int c_x = csv::column(branches, "reactance_pu");
    int c_lim = csv::column(branches, "limit_mw");
    for (size_t r = 0; r < branches.rows.size(); ++r) {
        Branch br;
        br.from_bus = static_cast<int>(csv::cell_int(branches, r, c_from));
        br.to_bus = static_cast<int>(csv::cell_int(branches, r, c_to));
        br.reactance_pu = csv::cell_double(branches, r, c_x);
        br.limit_mw = csv::cell_double(branches, r, c_lim);
        gc.branches.push_back(br);
    }

    csv::Table gens = csv::read(gen_path);
    int g_id = csv::column(gens, "id");
    int g_bus = csv::column(gens, "bus");
    int g_pmax = csv::column(gens, "p_max_mw");
    int g_cost = csv::column(gens, "cost_per_mwh");
    for (size_t r = 0; r < gens.rows.size(); ++r) {
        Generator g;
        g.id = static_cast<int>(csv::cell_int(gens, r, g_id));
        g.bus = static_cast<int>(csv::cell_int(gens, r, g_bus));
        g.p_max_mw = csv::cell_double(gens, r, g_pmax);
        g.cost_per_mwh = csv::cell_double(gens, r, g_cost);
        gc.generators.push_back(g);
    }

    csv::Table loads = csv::read(load_path);
    int l_bus = csv::column(loads, "bus");
    int l_res = csv::column(loads, "w_residential");
    int l_biz = csv::column(loads, "w_business");
    int l_oth = csv::column(loads, "w_other");
    for (size_t r = 0; r < loads.rows.size(); ++r) {
        LoadBus lb;
        lb.bus = static_cast<int>(csv::cell_int(loads, r, l_bus));
        lb.w_residential = csv::cell_double(loads, r, l_res);
        lb.w_business = csv::cell_double(loads, r, l_biz);
        lb.w_other = csv::cell_double(loads, r, l_oth);
        gc.load_buses.push_back(lb);
    }

    auto violations = validate_case(gc);
    if (!violations.empty()) {
        std::string msg = "grid case invalid:";
        for (const auto& v : violations) msg += "\n  [" + std::string(to_string(v.code)) + "] " + v.message;
        throw ValidationError(msg);
    }
    gc.reindex();
    return gc;
}

/// Writes the four case CSVs back out; loading them again reproduces the
/// case field-for-field.
inline void save_grid_case(const GridCase& gc, const std::string& bus_path,
                           const std::string& branch_path, const std::string& gen_path,
                           const std::string& load_path) {
    {
        std::ofstream out(bus_path);
        out << "id,zone,is_slack,base_mva\n";
        for (size_t i = 0; i < gc.buses.size(); ++i) {
            const Bus& b = gc.buses[i];
            out << b.id << ',' << b.zone << ',' << (b.is_slack ? 1 : 0) << ','
                << csv::fmt(gc.base_mva) << '\n';
        }
    }
    {
        std::ofstream out(branch_path);
        out << "from_bus,to_bus,reactance_pu,limit_mw\n";
        for (const Branch& br : gc.branches)
            out << br.from_bus << ',' << br.to_bus << ',' << csv::fmt(br.reactance_pu) << ','
                << csv::fmt(br.limit_mw) << '\n';
    }
    {
        std::ofstream out(gen_path);
        out << "id,bus,p_max_mw,cost_per_mwh\n";
        for (const Generator& g : gc.generators)
            out << g.id << ',' << g.bus << ',' << csv::fmt(g.p_max_mw) << ','
                << csv::fmt(g.cost_per_mwh) << '\n';
    }
    {
        std::ofstream out(load_path);
        out << "bus,w_residential,w_business,w_other\n";
        for (const LoadBus& lb : gc.load_buses)
            out << lb.bus << ',' << csv::fmt(lb.w_residential) << ',' << csv::fmt(lb.w_business)
                << ',' << csv::fmt(lb.w_other) << '\n';
    }
}

} // namespace gridflex
