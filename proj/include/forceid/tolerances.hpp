#pragma once

namespace forceid::tolerances {

// Kernel thresholds. Tests and the acceptance suite refer to these by name.

/// Relative tolerance for the compatibility conditions between initial and boundary data.
inline constexpr double compatibility = 1e-10;

/// A Cramer denominator |den| < step_singularity * max(A^2, 1) is treated as singular.
inline constexpr double step_singularity = 1e-14;

/// Grid positions within this many element widths of a node are snapped onto it.
inline constexpr double node_snap = 1e-9;

/// Relative pivot threshold for Gaussian elimination.
inline constexpr double pivot = 1e-14;

/// One-sided Jacobi SVD: convergence threshold on the normalized column inner product.
inline constexpr double jacobi_offdiag = 1e-14;
inline constexpr int jacobi_max_sweeps = 60;

/// |c dt / dx - 1| above this triggers the Courant warning.
inline constexpr double courant = 1e-12;

}  // namespace forceid::tolerances
