use thiserror::Error;

use crate::fields::EvalError;

/// Errors raised by the pointwise, connection, curvature, soliton and
/// hypersurface layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("metric is not positive definite (Cholesky pivot {pivot:.3e})")]
    NotPositiveDefinite { pivot: f64 },
    #[error("tensor is not symmetric: component ({i},{j}) differs by {gap:.3e}")]
    Asymmetric { i: usize, j: usize, gap: f64 },
    #[error(
        "slot {slot} is invalid for a rank-{rank} tensor or already has the requested variance"
    )]
    InvalidSlot { slot: usize, rank: usize },
    #[error("tensor rank {rank} exceeds the supported maximum of 4")]
    RankOverflow { rank: usize },
    #[error("Jacobi iteration did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("fields live on different charts (dimension {expected} vs {got})")]
    ChartMismatch { expected: usize, got: usize },
    #[error("derivative order {requested} unavailable (field supports up to {available})")]
    OrderUnavailable { requested: u8, available: u8 },
    #[error("matrix of jets is singular")]
    Singular,
    #[error("vector field vanishes (norm {norm:.3e}); decomposition is degenerate")]
    ZeroVector { norm: f64 },
    #[error("vector field is not torse-forming (relative residual {residual:.3e})")]
    NotTorseForming { residual: f64 },
    #[error("premise `{premise}` violated at {point:?} (residual {residual:.3e})")]
    PremiseViolated {
        premise: String,
        point: Vec<f64>,
        residual: f64,
    },
    #[error("covector norm is not constant over the sample (spread {spread:.3e})")]
    NonConstantNorm { spread: f64 },
    #[error("connection is not torsion-free (max torsion {torsion:.3e})")]
    NotTorsionFree { torsion: f64 },
    #[error("immersion Jacobian is rank deficient (smallest singular value {sigma_min:.3e})")]
    RankDeficient { sigma_min: f64 },
    #[error("operator is not eta-umbilical ({clusters} distinct eigenvalue clusters)")]
    NotEtaUmbilical { clusters: usize },
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
