//! Default numerical tolerances.
//!
//! All thresholds are relative to the natural scale of the quantity they
//! guard (max-entry norm, spectral radius, or largest singular value) unless
//! the name says otherwise.

/// Hermiticity check: `max |M - M^dagger| <= HERMITICITY * max(1, max |M|)`.
pub const HERMITICITY: f64 = 1e-10;

/// Eigenvalues closer than `EIGEN_GROUPING * spectral radius` share a group.
pub const EIGEN_GROUPING: f64 = 1e-9;

/// Singular values below `RANK * largest singular value` count as zero.
pub const RANK: f64 = 1e-9;

/// Nullspace threshold for the stacked non-disturbing constraint systems.
pub const NULLSPACE: f64 = 1e-9;

/// Pairwise orthogonality `tr(rho_i rho_j)` and normalization checks.
pub const STATE: f64 = 1e-9;

/// Residual threshold for non-disturbance and invariance reports.
pub const NONDISTURB: f64 = 1e-8;

/// Branches whose restricted trace falls at or below this are eliminated.
pub const ELIMINATION: f64 = 1e-10;

/// Isometry check `Q^dagger Q = I`.
pub const ISOMETRY: f64 = 1e-8;

/// Maximum supported matrix dimension.
pub const MAX_DIM: usize = 64;

/// Iteration cap handed to the Hermitian eigensolver.
pub const EIGEN_MAX_ITER: usize = 10_000;
