use thiserror::Error;

/// Errors shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("ground sets differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("restriction level {m} outside 1..={n}")]
    RangeError { m: usize, n: usize },
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("invalid mass partition: {0}")]
    InvalidMassPartition(String),
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("state has {blocks} blocks but the chain allows at most {k}")]
    TooManyBlocks { blocks: usize, k: usize },
    #[error("state space has {states} partitions, above the dense-kernel limit of {limit}")]
    StateSpaceTooLarge { states: u128, limit: usize },
    #[error("permanent guard: matrix is {n}x{n}, limit is {limit}")]
    MatrixTooLarge { n: usize, limit: usize },
    #[error("stationary distribution may not be unique: {0}")]
    UniquenessNotGuaranteed(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
