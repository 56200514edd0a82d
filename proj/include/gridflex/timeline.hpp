#pragma once

// Hourly scenario data: counterfactual load per load bus, available
// capacity per generator, the committed interruptible MW, and an optional
// reference shed series for validation statistics. Files use a long
// (hour, entity, value) layout; loading checks that every hour covers
// every entity exactly once and that hours form one contiguous run.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gridflex/constants.hpp"
#include "gridflex/csv.hpp"
#include "gridflex/errors.hpp"
#include "gridflex/grid.hpp"

namespace gridflex {

struct ScenarioTimeline {
    std::vector<int> hour_ids; // original hour_index values, contiguous ascending
    Eigen::MatrixXd load; // hours x load buses, MW
    Eigen::MatrixXd cap; // hours x generators, MW available
    Eigen::VectorXd commitment; // hours, committed interruptible MW (zero when absent)
    std::optional<Eigen::VectorXd> reference_shed; // hours, MW

    int hours() const { return static_cast<int>(hour_ids.size()); }
};

namespace detail {

/// Reads a long-format (hour, key, value) table into an hours x keys
/// matrix. keys lists the expected entity ids in column order.
inline Eigen::MatrixXd read_long_series(const std::string& path, const char* key_col,
                                        const char* value_col, const std::vector<int>& keys,
                                        std::vector<int>& hour_ids, const char* what) {
    csv::Table t = csv::read(path);
    int c_hour = csv::column(t, "hour_index");
    int c_key = csv::column(t, key_col);
    int c_val = csv::column(t, value_col);

    std::map<int, int> key_pos;
    for (size_t i = 0; i < keys.size(); ++i) key_pos.emplace(keys[i], static_cast<int>(i));

    std::map<int, std::vector<std::pair<int, double>>> by_hour;
    for (size_t r = 0; r < t.rows.size(); ++r) {
        int h = static_cast<int>(csv::cell_int(t, r, c_hour));
        int k = static_cast<int>(csv::cell_int(t, r, c_key));
        double v = csv::cell_double(t, r, c_val);
        if (!key_pos.count(k))
            throw ValidationError(std::string(what) + ": " + path + " row " + std::to_string(r + 2) +
                                  " references unknown " + key_col + " " + std::to_string(k));
        if (!std::isfinite(v) || v < 0)
            throw ValidationError(std::string(what) + ": " + path + " row " + std::to_string(r + 2) +
                                  " has invalid " + value_col + " " + csv::fmt(v));
        by_hour[h].emplace_back(key_pos[k], v);
    }
    if (by_hour.empty()) throw ValidationError(std::string(what) + ": " + path + " has no data rows");

    std::vector<int> hours;
    for (const auto& [h, _] : by_hour) hours.push_back(h);
    for (size_t i = 1; i < hours.size(); ++i)
        if (hours[i] != hours[i - 1] + 1)
            throw ValidationError(std::string(what) + ": " + path + " skips hour " +
                                  std::to_string(hours[i - 1] + 1));
    if (hour_ids.empty())
        hour_ids = hours;
    else if (hours != hour_ids)
        throw ValidationError(std::string(what) + ": " + path + " covers hours " +
                              std::to_string(hours.front()) + ".." + std::to_string(hours.back()) +
                              " but the timeline covers " + std::to_string(hour_ids.front()) + ".." +
                              std::to_string(hour_ids.back()));

    Eigen::MatrixXd out(hours.size(), keys.size());
    out.setConstant(std::numeric_limits<double>::quiet_NaN());
    for (const auto& [h, cells] : by_hour) {
        int row = h - hours.front();
        for (const auto& [col, v] : cells) {
            if (!std::isnan(out(row, col)))
                throw ValidationError(std::string(what) + ": " + path + " repeats hour " +
                                      std::to_string(h) + " for " + key_col + " " +
                                      std::to_string(keys[col]));
            out(row, col) = v;
        }
    }
    if (out.hasNaN())
        for (Eigen::Index r = 0; r < out.rows(); ++r)
            for (Eigen::Index c = 0; c < out.cols(); ++c)
                if (std::isnan(out(r, c)))
                    throw ValidationError(std::string(what) + ": " + path + " is missing hour " +
                                          std::to_string(hours.front() + static_cast<int>(r)) +
                                          " for " + key_col + " " + std::to_string(keys[c]));
    return out;
}

/// Reads an (hour, value) table aligned with already-loaded hour ids.
inline Eigen::VectorXd read_hour_series(const std::string& path, const char* value_col,
                                        const std::vector<int>& hour_ids, const char* what) {
    csv::Table t = csv::read(path);
    int c_hour = csv::column(t, "hour_index");
    int c_val = csv::column(t, value_col);
    Eigen::VectorXd out = Eigen::VectorXd::Constant(hour_ids.size(),
                                                    std::numeric_limits<double>::quiet_NaN());
    for (size_t r = 0; r < t.rows.size(); ++r) {
        int h = static_cast<int>(csv::cell_int(t, r, c_hour));
        double v = csv::cell_double(t, r, c_val);
        if (h < hour_ids.front() || h > hour_ids.back())
            throw ValidationError(std::string(what) + ": " + path + " has hour " + std::to_string(h) +
                                  " outside the timeline range");
        if (!std::isfinite(v) || v < 0)
            throw ValidationError(std::string(what) + ": " + path + " row " + std::to_string(r + 2) +
                                  " has invalid " + value_col + " " + csv::fmt(v));
        Eigen::Index i = h - hour_ids.front();
        if (!std::isnan(out[i]))
            throw ValidationError(std::string(what) + ": " + path + " repeats hour " + std::to_string(h));
        out[i] = v;
    }
    for (Eigen::Index i = 0; i < out.size(); ++i)
        if (std::isnan(out[i]))
            throw ValidationError(std::string(what) + ": " + path + " is missing hour " +
                                  std::to_string(hour_ids.front() + static_cast<int>(i)));
    return out;
}

} // namespace detail

/// Loads and cross-validates the hourly inputs for one scenario. Pass an
/// empty string to skip the optional commitment and reference files.
inline ScenarioTimeline load_timeline(const GridCase& gc, const std::string& timeline_path,
                                      const std::string& capacity_path,
                                      const std::string& commitment_path = "",
                                      const std::string& reference_path = "") {
    ScenarioTimeline tl;

    std::vector<int> load_keys, gen_keys;
    for (const LoadBus& lb : gc.load_buses) load_keys.push_back(lb.bus);
    for (const Generator& g : gc.generators) gen_keys.push_back(g.id);

    tl.load = detail::read_long_series(timeline_path, "bus", "counterfactual_load_mw", load_keys,
                                       tl.hour_ids, "timeline");
    tl.cap = detail::read_long_series(capacity_path, "generator_id", "available_mw", gen_keys,
                                      tl.hour_ids, "capacity");

    for (Eigen::Index h = 0; h < tl.cap.rows(); ++h)
        for (size_t k = 0; k < gc.generators.size(); ++k)
            if (tl.cap(h, static_cast<Eigen::Index>(k)) >
                gc.generators[k].p_max_mw + kFeasTolMw)
                throw ValidationError("capacity: generator " + std::to_string(gen_keys[k]) +
                                      " offers " + csv::fmt(tl.cap(h, k)) + " MW at hour " +
                                      std::to_string(tl.hour_ids[h]) + ", above its installed " +
                                      csv::fmt(gc.generators[k].p_max_mw));

    if (!commitment_path.empty())
        tl.commitment = detail::read_hour_series(commitment_path, "committed_mw", tl.hour_ids,
                                                 "commitment");
    else
        tl.commitment = Eigen::VectorXd::Zero(tl.hours());

    if (!reference_path.empty())
        tl.reference_shed = detail::read_hour_series(reference_path, "total_shed_mw", tl.hour_ids,
                                                     "reference");
    return tl;
}

} // namespace gridflex
