#pragma once

// Series statistics for simulation reports: reliability energy totals,
// agreement with a reference shed series, and a density estimate of the
// hourly shed distribution.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "gridflex/csv.hpp"
#include "gridflex/errors.hpp"

namespace gridflex {

/// Sum of a per-hour MW series over 1-hour steps, in MWh.
inline double series_energy(const std::vector<double>& hourly_mw) {
    double s = 0;
    for (double v : hourly_mw) s += v;
    return s;
}

/// Standard Pearson correlation. Both series must vary; a constant
/// series has no defined correlation.
inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw DimensionError("pearson: series lengths differ");
    const size_t n = a.size();
    if (n < 2) throw DimensionError("pearson: need at least two points");
    double ma = 0, mb = 0;
    for (size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double sab = 0, saa = 0, sbb = 0;
    for (size_t i = 0; i < n; ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa <= 0 || sbb <= 0) throw DegenerateSeries("pearson: zero-variance series");
    return sab / std::sqrt(saa * sbb);
}

/// Silverman's rule-of-thumb bandwidth. Returns 0 for a degenerate
/// (all-equal) sample; callers decide how to handle that.
inline double silverman_bandwidth(std::vector<double> samples) {
    const size_t n = samples.size();
    if (n < 2) return 0;
    double mean = 0;
    for (double v : samples) mean += v;
    mean /= static_cast<double>(n);
    double var = 0;
    for (double v : samples) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n - 1);
    double sd = std::sqrt(var);

    std::sort(samples.begin(), samples.end());
    auto quantile = [&](double q) {
        double pos = q * static_cast<double>(n - 1);
        size_t lo = static_cast<size_t>(pos);
        size_t hi = std::min(lo + 1, n - 1);
        double frac = pos - static_cast<double>(lo);
        return samples[lo] * (1 - frac) + samples[hi] * frac;
    };
    double iqr = quantile(0.75) - quantile(0.25);
    double spread = sd;
    if (iqr > 0) spread = std::min(spread, iqr / 1.34);
    return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

/// Gaussian-kernel density of a sample on a uniform 512-point grid
/// covering [min - 3h, max + 3h]. The truncated curve is renormalized so
/// its trapezoid integral is exactly 1.
inline std::vector<std::pair<double, double>> shed_density(const std::vector<double>& samples,
                                                           double bandwidth) {
    if (samples.empty()) throw DimensionError("density: empty sample");
    if (!(bandwidth > 0) || !std::isfinite(bandwidth))
        throw InvalidBandwidth("density: bandwidth must be positive, got " + csv::fmt(bandwidth));

    const int grid_n = 512;
    double lo = *std::min_element(samples.begin(), samples.end()) - 3 * bandwidth;
    double hi = *std::max_element(samples.begin(), samples.end()) + 3 * bandwidth;
    double dx = (hi - lo) / (grid_n - 1);

    std::vector<std::pair<double, double>> curve(grid_n);
    const double norm = 1.0 / (static_cast<double>(samples.size()) * bandwidth *
                               std::sqrt(2.0 * std::numbers::pi));
    for (int i = 0; i < grid_n; ++i) {
        double x = lo + i * dx;
        double d = 0;
        for (double s : samples) {
            double z = (x - s) / bandwidth;
            d += std::exp(-0.5 * z * z);
        }
        curve[i] = {x, d * norm};
    }

    double integral = 0;
    for (int i = 1; i < grid_n; ++i)
        integral += 0.5 * (curve[i - 1].second + curve[i].second) * dx;
    for (auto& [x, d] : curve) d /= integral;
    return curve;
}

inline void write_density_csv(const std::string& path,
                              const std::vector<std::pair<double, double>>& curve) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << "x_mw,density\n";
    for (const auto& [x, d] : curve) out << csv::fmt(x) << ',' << csv::fmt(d) << '\n';
}

} // namespace gridflex
