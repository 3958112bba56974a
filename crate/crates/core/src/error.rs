//! Crate-wide error type.
//!
//! Scientific "negative results" (a missing bunching certificate, a positive
//! periodic exponent) are *values*, not errors; see
//! [`crate::analysis::Obstruction`]. Errors below are contract violations:
//! bad inputs, failed preconditions, or iteration budgets running out.

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Input data violated a documented invariant (bad transition matrix,
    /// non-stochastic row, singular table entry, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// `bracket(x, y)` requires `x_0 = y_0`.
    #[error("mismatched cylinder: x_0 = {x0} but y_0 = {y0}")]
    MismatchedCylinder { x0: u16, y0: u16 },

    /// No path of the requested length between two symbols.
    #[error("no valid word of length {length} from symbol {from} to symbol {to}")]
    NoPath { from: u16, to: u16, length: usize },

    /// The subshift is not topologically mixing (no power of Q is positive).
    #[error("subshift is not topologically mixing")]
    NotMixing,

    /// A point claimed to be k-periodic is not.
    #[error("point is not periodic with period {period}")]
    NotPeriodic { period: usize },

    /// SL-normalization of an even-dimensional cocycle with a negative
    /// determinant entry: no real d-th root of the sign exists.
    #[error("table entry has negative determinant {det} in even dimension {dim}")]
    NegativeDeterminant { det: f64, dim: usize },

    /// An iterative solver exhausted its iteration budget.
    #[error("no convergence after {iterations} iterations (residual {residual})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// The practical ellipticity check failed: powers of the matrix are not
    /// uniformly bounded, so no invariant inner product can exist.
    #[error("matrix is not elliptic: ||M^n|| ||M^-n|| reached {witness} at n = {n}")]
    NotElliptic { witness: f64, n: usize },

    /// Stable holonomy requested between points not on a common local stable set.
    #[error("points are not on a common local stable set")]
    NotOnStableSet,

    /// Unstable holonomy requested between points not on a common local unstable set.
    #[error("points are not on a common local unstable set")]
    NotOnUnstableSet,

    /// A holonomy or transport was requested without a valid bunching certificate.
    #[error("no valid bunching certificate: {0}")]
    NoCertificate(String),

    /// `extend_structure` has no anchor for the cylinder containing the point.
    #[error("missing anchor for cylinder [0;{symbol}]")]
    MissingAnchor { symbol: u16 },

    /// A shadowing connector word does not connect the designated endpoints.
    #[error("invalid connector: {0}")]
    InvalidConnector(String),

    /// Shadowing spec periods are inconsistent (not fixed by f^k, m not a
    /// multiple of k, or m below the mixing index).
    #[error("period mismatch: {0}")]
    PeriodMismatch(String),

    /// The distance hypothesis of the periodic-approximation bound fails.
    #[error("shadowing distance hypothesis fails at iterate {iterate}: rho = {rho} > bound {bound}")]
    ShadowingHypothesisFails { iterate: usize, rho: f64, bound: f64 },

    /// Invariant-subspace detection is limited to small dimensions.
    #[error("dimension {dim} too large for invariant subspace search (max {max})")]
    DimensionTooLarge { dim: usize, max: usize },

    /// A finite enumeration (word graph, window table) exceeded its size guard.
    #[error("enumeration too large: {count} words exceeds limit {limit}")]
    TooManyWords { count: usize, limit: usize },
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
