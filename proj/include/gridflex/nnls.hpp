#pragma once

// Nonnegative least squares, Lawson-Hanson active-set method. Solves
//   min ||A x - b||_2  s.t.  x >= 0
// exactly (finite termination) for the small column counts this project
// needs; the passive-set subproblems go through column-pivoted QR.

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "gridflex/errors.hpp"

namespace gridflex {

struct NnlsResult {
    Eigen::VectorXd x;
    double residual_norm = 0;
    int iterations = 0;
};

inline NnlsResult nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
    const int m = static_cast<int>(a.rows());
    const int k = static_cast<int>(a.cols());
    if (k < 1 || m < k || b.size() != m)
        throw DimensionError("nnls: need m >= k >= 1 and matching target length");
    if (!a.allFinite() || !b.allFinite()) throw NumericalError("nnls: non-finite input");

    Eigen::VectorXd x = Eigen::VectorXd::Zero(k);
    std::vector<char> passive(k, 0);
    const double tol = 1e-10 * std::max(1.0, (a.transpose() * b).cwiseAbs().maxCoeff());
    const int limit = 30 * k + 30;
    int iter = 0;

    auto solve_passive = [&](Eigen::VectorXd& z) {
        std::vector<int> idx;
        for (int j = 0; j < k; ++j)
            if (passive[j]) idx.push_back(j);
        Eigen::MatrixXd ap(m, idx.size());
        for (size_t t = 0; t < idx.size(); ++t) ap.col(static_cast<int>(t)) = a.col(idx[t]);
        Eigen::VectorXd zp = ap.colPivHouseholderQr().solve(b);
        z = Eigen::VectorXd::Zero(k);
        for (size_t t = 0; t < idx.size(); ++t) z[idx[t]] = zp[static_cast<int>(t)];
    };

    while (iter < limit) {
        // Most negative gradient among the active (zero) coordinates.
        Eigen::VectorXd w = a.transpose() * (b - a * x);
        int enter = -1;
        double best = tol;
        for (int j = 0; j < k; ++j)
            if (!passive[j] && w[j] > best) {
                best = w[j];
                enter = j;
            }
        if (enter < 0) break; // KKT satisfied
        passive[enter] = 1;

        while (true) {
            ++iter;
            Eigen::VectorXd z;
            solve_passive(z);
            bool all_pos = true;
            for (int j = 0; j < k; ++j)
                if (passive[j] && z[j] <= 0) all_pos = false;
            if (all_pos) {
                x = z;
                break;
            }
            // Back off along x -> z until the first passive coordinate hits
            // zero, then deactivate everything that landed there.
            double alpha = 1.0;
            for (int j = 0; j < k; ++j)
                if (passive[j] && z[j] <= 0) alpha = std::min(alpha, x[j] / (x[j] - z[j]));
            x += alpha * (z - x);
            for (int j = 0; j < k; ++j)
                if (passive[j] && x[j] <= 1e-12) {
                    x[j] = 0;
                    passive[j] = 0;
                }
            if (iter >= limit) break;
        }
    }
    if (iter >= limit) throw NumericalError("nnls: active-set iteration cap reached");

    NnlsResult r;
    r.x = x;
    r.residual_norm = (a * x - b).norm();
    r.iterations = iter;
    return r;
}

} // namespace gridflex
