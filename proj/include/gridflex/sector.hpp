#pragma once

// Sector consumption profiling: recover hypothetical per-sector maximum
// capacities from normalized hourly profiles and observed totals, then
// split each hour's MW into residential / business / other shares.

#include <Eigen/Dense>
#include <fstream>
#include <string>
#include <vector>

#include "gridflex/csv.hpp"
#include "gridflex/errors.hpp"
#include "gridflex/nnls.hpp"

namespace gridflex {

/// Hourly fractions per sector plus the observed total, one zone's worth.
struct SectorProfileMatrix {
    Eigen::VectorXd r_frac, b_frac, o_frac; // each entry in [0,1]
    Eigen::VectorXd total_mw; // >= 0

    int hours() const { return static_cast<int>(total_mw.size()); }
};

struct SectorCapacities {
    double r_max = 0, b_max = 0, o_max = 0; // MW
    double residual_norm = 0; // of the NNLS fit
};

struct SectorHour {
    double raw_res = 0, raw_bus = 0, raw_oth = 0; // capacity * fraction
    double mw_res = 0, mw_bus = 0, mw_oth = 0; // renormalized to the total
};

inline void validate_profiles(const SectorProfileMatrix& p) {
    const int n = p.hours();
    if (n < 3 || p.r_frac.size() != n || p.b_frac.size() != n || p.o_frac.size() != n)
        throw ValidationError("sector profiles need >= 3 aligned hours");
    if (!p.r_frac.allFinite() || !p.b_frac.allFinite() || !p.o_frac.allFinite() ||
        !p.total_mw.allFinite())
        throw ValidationError("sector profiles contain non-finite entries");
    for (int i = 0; i < n; ++i) {
        for (double f : {p.r_frac[i], p.b_frac[i], p.o_frac[i]})
            if (f < 0.0 || f > 1.0)
                throw ValidationError("profile fraction outside [0,1] at hour " + std::to_string(i));
        if (p.total_mw[i] < 0)
            throw ValidationError("negative consumption total at hour " + std::to_string(i));
    }
}

inline SectorProfileMatrix load_profiles(const std::string& path) {
    csv::Table t = csv::read(path);
    int c_h = csv::column(t, "hour_index");
    int c_r = csv::column(t, "r_frac");
    int c_b = csv::column(t, "b_frac");
    int c_o = csv::column(t, "o_frac");
    int c_t = csv::column(t, "total_mw");
    (void)c_h;
    const int n = static_cast<int>(t.rows.size());
    SectorProfileMatrix p;
    p.r_frac.resize(n);
    p.b_frac.resize(n);
    p.o_frac.resize(n);
    p.total_mw.resize(n);
    for (int i = 0; i < n; ++i) {
        p.r_frac[i] = csv::cell_double(t, i, c_r);
        p.b_frac[i] = csv::cell_double(t, i, c_b);
        p.o_frac[i] = csv::cell_double(t, i, c_o);
        p.total_mw[i] = csv::cell_double(t, i, c_t);
    }
    validate_profiles(p);
    return p;
}

inline SectorCapacities estimate_sector_capacities(const SectorProfileMatrix& p) {
    validate_profiles(p);
    Eigen::MatrixXd design(p.hours(), 3);
    design.col(0) = p.r_frac;
    design.col(1) = p.b_frac;
    design.col(2) = p.o_frac;
    NnlsResult fit = nnls(design, p.total_mw);
    return {fit.x[0], fit.x[1], fit.x[2], fit.residual_norm};
}

/// Per-hour MW by sector: capacity-times-fraction raw products, plus the
/// same triple rescaled so it partitions the observed total exactly.
/// Hours with zero total (or zero raw sum) get all-zero shares.
inline std::vector<SectorHour> hourly_sector_mw(const SectorProfileMatrix& p,
                                                const SectorCapacities& caps) {
    validate_profiles(p);
    std::vector<SectorHour> out(p.hours());
    for (int i = 0; i < p.hours(); ++i) {
        SectorHour& h = out[i];
        h.raw_res = caps.r_max * p.r_frac[i];
        h.raw_bus = caps.b_max * p.b_frac[i];
        h.raw_oth = caps.o_max * p.o_frac[i];
        double raw_sum = h.raw_res + h.raw_bus + h.raw_oth;
        if (p.total_mw[i] > 0 && raw_sum > 0) {
            double s = p.total_mw[i] / raw_sum;
            h.mw_res = h.raw_res * s;
            h.mw_bus = h.raw_bus * s;
            h.mw_oth = h.raw_oth * s;
        }
    }
    return out;
}

inline void save_sectors(const std::vector<SectorHour>& hours, const std::string& path) {
    std::ofstream out(path);
    out << "hour_index,res_mw,bus_mw,oth_mw\n";
    for (size_t i = 0; i < hours.size(); ++i)
        out << i << ',' << csv::fmt(hours[i].mw_res) << ',' << csv::fmt(hours[i].mw_bus) << ','
            << csv::fmt(hours[i].mw_oth) << '\n';
}

} // namespace gridflex
