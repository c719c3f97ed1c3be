//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("real-expanded vector must have even length, got {0}")]
    OddLength(usize),

    #[error("symbol {symbol} is not a point of the {constellation} constellation")]
    OffConstellation { symbol: String, constellation: String },

    #[error("degenerate symbol decomposition for user {user}: |det| = {det:.3e} < 1e-12")]
    DegenerateDecomposition { user: usize, det: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("channel matrix is rank deficient")]
    RankDeficientChannel,

    #[error("precoding factor must be positive for QAM demodulation, got {0}")]
    NonPositiveBeta(f64),

    #[error("bit count {0} is not a multiple of {1} bits per symbol")]
    BitLength(usize, usize),

    #[error("search space too large: {actual} residual entries exceeds the guard of {max}")]
    SizeGuard { actual: usize, max: usize },

    #[error("box constraint violated: |x[{index}]| = {value:.6e} exceeds {bound:.6e}")]
    BoxViolation { index: usize, value: f64, bound: f64 },

    #[error("linear program is unbounded; the box constraints should prevent this")]
    Unbounded,

    #[error("simplex failed to converge within {0} pivots")]
    SimplexStall(usize),

    #[error("linear program has no free variables")]
    EmptyProblem,

    #[error("no unassigned entries to branch on")]
    NoBranchCandidates,

    #[error("relaxation unexpectedly infeasible")]
    UnexpectedInfeasible,

    #[error("unknown precoder name `{0}`")]
    UnknownPrecoder(String),

    #[error("unknown modulation `{0}`")]
    UnknownModulation(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
