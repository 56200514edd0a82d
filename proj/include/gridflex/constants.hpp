#pragma once

namespace gridflex {

// Central tolerances. Every module reads these; none redefines its own.

/// Absolute MW tolerance for power-balance and limit checks.
inline constexpr double kFeasTolMw = 1e-6;

/// Relative optimality gap accepted from the dispatch LP.
inline constexpr double kRelOptTol = 1e-6;

/// Sector weights on a load bus must sum to 1 within this.
inline constexpr double kWeightSumTol = 1e-9;

/// Active-set NNLS dual-feasibility (KKT) tolerance.
inline constexpr double kKktTol = 1e-8;

/// Treated as "no load / no capacity left" in allocation loops.
inline constexpr double kAllocEps = 1e-9;

} // namespace gridflex
