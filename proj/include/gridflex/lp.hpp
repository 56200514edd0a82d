#pragma once

// Dense bounded-variable linear programming by two-phase primal simplex.
//
//   minimize    c'x
//   subject to  A x = b,   lo <= x <= hi   (entries of lo/hi may be +-inf)
//
// Written for the small, well-scaled systems produced by hourly dispatch
// snapshots (tens of rows), so clarity and determinism win over speed:
// the basis is refactorized from scratch every iteration and the basic
// solution is recomputed from the bounds, which keeps drift out of long
// pivot sequences. Dantzig pricing with lowest-index tie-breaks, falling
// back to Bland's rule after a fixed iteration budget so cycling cannot
// hang the solver.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "gridflex/errors.hpp"

namespace gridflex::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Problem {
    Eigen::MatrixXd a; // m x n
    Eigen::VectorXd b; // m
    Eigen::VectorXd c; // n
    Eigen::VectorXd lo; // n, may be -inf
    Eigen::VectorXd hi; // n, may be +inf
};

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

struct Solution {
    Status status = Status::IterationLimit;
    Eigen::VectorXd x;
    double objective = 0;
    int iterations = 0;
};

namespace detail {

// Where a nonbasic variable currently sits.
enum class At : std::uint8_t { Lower, Upper, Free };

struct Tableau {
    int n = 0; // structural variables
    int m = 0; // rows == artificial variables
    Eigen::MatrixXd a; // m x (n + m), artificial columns appended
    Eigen::VectorXd b;
    Eigen::VectorXd lo, hi; // length n + m
    Eigen::VectorXd cost; // current objective (phase 1 or 2)
    std::vector<int> basis; // m column indices
    std::vector<char> in_basis; // n + m flags
    std::vector<At> nonbasic_at; // tracked for every column, meaningful when nonbasic
    Eigen::VectorXd x; // full point, length n + m

    int total() const { return n + m; }
};

inline void recompute_basics(Tableau& t) {
    // x_B = B^{-1} (b - N x_N); nonbasic entries already sit at their bounds.
    Eigen::VectorXd rhs = t.b;
    for (int j = 0; j < t.total(); ++j)
        if (!t.in_basis[j] && t.x[j] != 0.0) rhs -= t.a.col(j) * t.x[j];
    Eigen::MatrixXd bmat(t.m, t.m);
    for (int i = 0; i < t.m; ++i) bmat.col(i) = t.a.col(t.basis[i]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(bmat);
    if (!lu.isInvertible()) throw NumericalError("simplex basis became singular");
    Eigen::VectorXd xb = lu.solve(rhs);
    for (int i = 0; i < t.m; ++i) t.x[t.basis[i]] = xb[i];
}

inline Eigen::VectorXd dual_prices(const Tableau& t) {
    Eigen::MatrixXd bmat(t.m, t.m);
    Eigen::VectorXd cb(t.m);
    for (int i = 0; i < t.m; ++i) {
        bmat.col(i) = t.a.col(t.basis[i]);
        cb[i] = t.cost[t.basis[i]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(bmat.transpose());
    if (!lu.isInvertible()) throw NumericalError("simplex basis became singular");
    return lu.solve(cb);
}

// One simplex phase over the current cost vector. Returns Optimal when no
// improving column remains; never returns Infeasible.
inline Status iterate(Tableau& t, int& iter, int iter_limit, int bland_after) {
    const double dual_tol = 1e-9 * (1.0 + t.cost.cwiseAbs().maxCoeff());
    const double piv_tol = 1e-9;

    while (true) {
        if (iter >= iter_limit) return Status::IterationLimit;
        ++iter;
        const bool bland = iter > bland_after;

        Eigen::VectorXd y = dual_prices(t);

        // Pricing: nonbasic column whose reduced cost points downhill.
        int q = -1;
        double best = dual_tol;
        double dir_q = 0;
        for (int j = 0; j < t.total(); ++j) {
            if (t.in_basis[j]) continue;
            if (t.hi[j] - t.lo[j] <= 0.0) continue; // fixed, cannot move
            double d = t.cost[j] - t.a.col(j).dot(y);
            double viol = 0, dir = 0;
            switch (t.nonbasic_at[j]) {
                case At::Lower: if (d < -dual_tol) { viol = -d; dir = +1; } break;
                case At::Upper: if (d > dual_tol) { viol = d; dir = -1; } break;
                case At::Free:
                    if (d < -dual_tol) { viol = -d; dir = +1; }
                    else if (d > dual_tol) { viol = d; dir = -1; }
                    break;
            }
            if (dir == 0) continue;
            if (bland) { q = j; dir_q = dir; break; } // lowest index, period
            if (viol > best) { best = viol; q = j; dir_q = dir; }
        }
        if (q < 0) return Status::Optimal;

        // Direction of basic variables as x_q moves by +dir_q.
        Eigen::MatrixXd bmat(t.m, t.m);
        for (int i = 0; i < t.m; ++i) bmat.col(i) = t.a.col(t.basis[i]);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(bmat);
        if (!lu.isInvertible()) throw NumericalError("simplex basis became singular");
        Eigen::VectorXd w = lu.solve(t.a.col(q));

        // Ratio test: step until x_q hits its far bound or a basic variable
        // hits one of its own.
        double t_max = kInf;
        if (std::isfinite(t.hi[q]) && std::isfinite(t.lo[q])) t_max = t.hi[q] - t.lo[q];
        int leave = -1; // basis position, -1 means bound flip of q
        double leave_at = 0; // bound value the leaving variable lands on
        double best_w = 0;
        for (int i = 0; i < t.m; ++i) {
            double delta = -dir_q * w[i]; // d(x_Bi)/dt
            int bj = t.basis[i];
            double ratio;
            double land;
            if (delta > piv_tol) {
                if (!std::isfinite(t.hi[bj])) continue;
                ratio = (t.hi[bj] - t.x[bj]) / delta;
                land = t.hi[bj];
            } else if (delta < -piv_tol) {
                if (!std::isfinite(t.lo[bj])) continue;
                ratio = (t.lo[bj] - t.x[bj]) / delta;
                land = t.lo[bj];
            } else {
                continue;
            }
            if (ratio < 0) ratio = 0; // tiny infeasibility from roundoff
            bool take = false;
            if (ratio < t_max - piv_tol) {
                take = true;
            } else if (ratio <= t_max + piv_tol && leave >= 0) {
                // Tie between leaving candidates: biggest pivot wins for
                // stability, then lowest basis position; under Bland take
                // the smallest variable index.
                if (bland)
                    take = t.basis[i] < t.basis[leave];
                else
                    take = std::abs(w[i]) > std::abs(best_w) + piv_tol;
            } else if (ratio <= t_max + piv_tol && leave < 0 && ratio < t_max) {
                take = true;
            }
            if (take) {
                t_max = std::min(t_max, ratio);
                leave = i;
                leave_at = land;
                best_w = w[i];
            }
        }

        if (!std::isfinite(t_max)) return Status::Unbounded;

        if (leave < 0) {
            // Bound flip: q travels its whole range, basis unchanged.
            t.x[q] = (dir_q > 0) ? t.hi[q] : t.lo[q];
            t.nonbasic_at[q] = (dir_q > 0) ? At::Upper : At::Lower;
            for (int i = 0; i < t.m; ++i) t.x[t.basis[i]] += -dir_q * w[i] * t_max;
            recompute_basics(t);
            continue;
        }

        // Pivot: q enters, basis[leave] exits onto the bound it hit.
        int out = t.basis[leave];
        t.x[q] += dir_q * t_max;
        t.x[out] = leave_at;
        t.nonbasic_at[out] = (leave_at == t.lo[out]) ? At::Lower : At::Upper;
        t.in_basis[out] = 0;
        t.basis[leave] = q;
        t.in_basis[q] = 1;
        recompute_basics(t);
    }
}

} // namespace detail

/// Solves the bounded LP. Deterministic: identical inputs give identical
/// pivot sequences and bit-identical results on a given platform.
inline Solution solve(const Problem& p) {
    using namespace detail;
    const int m = static_cast<int>(p.a.rows());
    const int n = static_cast<int>(p.a.cols());
    if (p.b.size() != m || p.c.size() != n || p.lo.size() != n || p.hi.size() != n)
        throw DimensionError("lp: inconsistent problem dimensions");
    for (int j = 0; j < n; ++j) {
        if (std::isnan(p.lo[j]) || std::isnan(p.hi[j]) || std::isnan(p.c[j]))
            throw NumericalError("lp: NaN in problem data");
        if (p.lo[j] > p.hi[j]) return {Status::Infeasible, Eigen::VectorXd::Zero(n), 0, 0};
    }
    if (!p.b.allFinite() || !p.a.allFinite()) throw NumericalError("lp: non-finite constraint data");

    if (m == 0) {
        // No equalities: each coordinate independently minimizes c_j x_j.
        Solution s;
        s.x = Eigen::VectorXd::Zero(n);
        for (int j = 0; j < n; ++j) {
            if (p.c[j] > 0) {
                if (!std::isfinite(p.lo[j])) return {Status::Unbounded, {}, 0, 0};
                s.x[j] = p.lo[j];
            } else if (p.c[j] < 0) {
                if (!std::isfinite(p.hi[j])) return {Status::Unbounded, {}, 0, 0};
                s.x[j] = p.hi[j];
            } else {
                s.x[j] = std::isfinite(p.lo[j]) ? p.lo[j] : (std::isfinite(p.hi[j]) ? p.hi[j] : 0.0);
            }
        }
        s.status = Status::Optimal;
        s.objective = p.c.dot(s.x);
        return s;
    }

    Tableau t;
    t.n = n;
    t.m = m;
    t.b = p.b;
    t.a.resize(m, n + m);
    t.a.leftCols(n) = p.a;
    t.lo.resize(n + m);
    t.hi.resize(n + m);
    t.lo.head(n) = p.lo;
    t.hi.head(n) = p.hi;
    t.x = Eigen::VectorXd::Zero(n + m);
    t.nonbasic_at.assign(n + m, At::Lower);
    t.in_basis.assign(n + m, 0);

    // Structural variables start on a finite bound (lower preferred), free
    // variables at zero.
    for (int j = 0; j < n; ++j) {
        if (std::isfinite(p.lo[j])) {
            t.x[j] = p.lo[j];
            t.nonbasic_at[j] = At::Lower;
        } else if (std::isfinite(p.hi[j])) {
            t.x[j] = p.hi[j];
            t.nonbasic_at[j] = At::Upper;
        } else {
            t.x[j] = 0;
            t.nonbasic_at[j] = At::Free;
        }
    }

    // Artificial column i is +-e_i, signed so the artificial starts >= 0.
    Eigen::VectorXd resid = p.b;
    for (int j = 0; j < n; ++j)
        if (t.x[j] != 0.0) resid -= p.a.col(j) * t.x[j];
    t.basis.resize(m);
    for (int i = 0; i < m; ++i) {
        double sgn = (resid[i] >= 0) ? 1.0 : -1.0;
        int col = n + i;
        t.a.col(col) = Eigen::VectorXd::Zero(m);
        t.a(i, col) = sgn;
        t.lo[col] = 0;
        t.hi[col] = kInf;
        t.x[col] = std::abs(resid[i]);
        t.basis[i] = col;
        t.in_basis[col] = 1;
    }

    const int iter_limit = 200 * (n + m) + 1000;
    const int bland_after = 100 + 20 * (n + m);
    int iter = 0;

    // Phase 1: minimize the artificial mass.
    t.cost = Eigen::VectorXd::Zero(n + m);
    t.cost.tail(m).setOnes();
    Status st = iterate(t, iter, iter_limit, bland_after);
    if (st == Status::IterationLimit) return {st, Eigen::VectorXd::Zero(n), 0, iter};
    double art_mass = 0;
    for (int i = n; i < n + m; ++i) art_mass += t.x[i];
    if (art_mass > 1e-7 * (1.0 + p.b.cwiseAbs().maxCoeff()))
        return {Status::Infeasible, Eigen::VectorXd::Zero(n), 0, iter};

    // Any artificial still basic sits at zero (possibly a redundant row).
    // Freeze all artificials so phase 2 cannot move them.
    for (int i = n; i < n + m; ++i) {
        t.lo[i] = 0;
        t.hi[i] = 0;
        t.x[i] = 0;
        if (!t.in_basis[i]) t.nonbasic_at[i] = At::Lower;
    }
    recompute_basics(t);

    // Phase 2: the real objective.
    t.cost = Eigen::VectorXd::Zero(n + m);
    t.cost.head(n) = p.c;
    st = iterate(t, iter, iter_limit, bland_after);

    Solution s;
    s.status = st;
    s.iterations = iter;
    s.x = t.x.head(n);
    s.objective = p.c.dot(s.x);
    return s;
}

} // namespace gridflex::lp
