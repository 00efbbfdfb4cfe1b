use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not Hermitian (max |M - M^dagger| = {0:e})")]
    NotHermitian(f64),
    #[error("trace is {0}, expected 1")]
    InvalidTrace(f64),
    #[error("negative eigenvalue {0:e} is below the repair threshold")]
    NotPositive(f64),
    #[error("vector norm is {0}, expected 1")]
    NotNormalized(f64),
    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),
    #[error("rank {rank} out of range 1..={max}")]
    RankOutOfRange { rank: usize, max: usize },
    #[error("ensemble size {size} is below the state rank {rank}")]
    EnsembleTooSmall { size: usize, rank: usize },
    #[error("total dimension {dim} exceeds the cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("expected dims {expected:?}, got {got:?}")]
    WrongDims {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("channel completeness violated by {0:e}")]
    Completeness(f64),
    #[error("degenerate distribution: {0}")]
    Degenerate(String),
    #[error("enumeration of {0} sequences exceeds the limit")]
    EnumerationTooLarge(u128),
    #[error("ensemble does not realize the state (max deviation {0:e})")]
    EnsembleMismatch(f64),
    #[error("missing entry for n = {0}")]
    MissingEntry(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
