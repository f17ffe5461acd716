use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("axis {axis} out of range (geometry has {available} position axes)")]
    AxisOutOfRange { axis: usize, available: usize },

    #[error("periodic boundary requested on ball axis {0}")]
    PeriodicOnBall(usize),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("operator is not invertible: min |eigenvalue| {gap:e} is below tolerance {tol:e}")]
    NotInvertible { gap: f64, tol: f64 },

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("geometry does not match model family: {0}")]
    GeometryMismatch(String),

    #[error("critical parameters: {0}")]
    CriticalParameters(String),

    #[error("Hamiltonian is not chiral: {0}")]
    NotChiral(String),

    #[error("grading does not commute with h (deviation {0:e})")]
    GradingMismatch(f64),

    #[error("parity mismatch: expected {expected} Dirac bundle")]
    ParityMismatch { expected: &'static str },

    #[error("pivot breakdown at elimination step {step}: |pivot| {pivot:e} below {tol:e}")]
    PivotBreakdown { step: usize, pivot: f64, tol: f64 },

    #[error("dimension {dim} exceeds the dense limit {limit}")]
    TooLarge { dim: usize, limit: usize },

    #[error("not a projection (deviation {0:e})")]
    NotProjection(f64),

    #[error("path sample {index} is not supported in P (deviation {deviation:e})")]
    SupportViolation { index: usize, deviation: f64 },

    #[error("gap closes on the k-grid near {k:?}: min |eigenvalue| {gap:e}")]
    GapClosed { k: Vec<f64>, gap: f64 },

    #[error("grid refinement changed the invariant: {coarse} at N={n} but {fine} at N={}", 2 * .n)]
    RefinementUnstable { coarse: i64, fine: i64, n: usize },

    #[error("weak invariant depends on transverse momentum: values {0:?}")]
    TransverseDependence(Vec<i64>),

    #[error("{excluded} of {total} disorder samples fail the gap policy")]
    TooManyExcluded { excluded: usize, total: usize },

    #[error("matrix is numerically singular (condition number {0:e})")]
    Singular(f64),

    #[error("iterative solver did not converge: {0}")]
    NoConvergence(String),
}
