//! Numerical tolerances shared by every module.
//!
//! All dimensions handled here are tiny (at most a few dozen), so near machine precision is
//! achievable and the defaults are tight on purpose.

/// Normalization of constructed kets and exact algebraic identities.
pub const CONSTRUCTION: f64 = 1e-12;

/// Eigen/Schmidt decompositions, Hermiticity, PSD and completeness checks.
pub const DECOMPOSITION: f64 = 1e-10;

/// Default certification tolerance.
pub const CERTIFICATION: f64 = 1e-9;

/// Human-facing reporting precision.
pub const REPORTING: f64 = 1e-6;

/// Schmidt coefficients at or below this value are dropped.
pub const SCHMIDT_TRUNCATION: f64 = 1e-9;

/// Relative threshold for rank decisions (rank-one elements, operator-space rank).
pub const RANK: f64 = 1e-9;

/// Joint-distribution normalization and no-signaling checks.
pub const DISTRIBUTION: f64 = 1e-9;
