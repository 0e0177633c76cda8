use alloc::string::String;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty vocabulary")]
    EmptyVocabulary,
    #[error("empty document")]
    EmptyDocument,
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("token id {id} out of range for vocabulary of size {v_size}")]
    TokenOutOfRange { id: u32, v_size: usize },
    #[error("context has length {got}, expected {expected}")]
    ContextLength { got: usize, expected: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("divergence: non-finite loss at epoch {epoch}, batch {batch}")]
    Divergence { epoch: usize, batch: usize },
    #[error("corpus of size {0} cannot be split")]
    TooSmallToSplit(usize),
    #[error("degenerate denominator: both entropy variances are zero")]
    DegenerateDenominator,
    #[error("probability {0} outside the open interval (0, 1)")]
    Domain(f64),
    #[error("MPT requires multiple splits")]
    MptNeedsMultipleSplits,
    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("split {index} failed: {reason}")]
    SplitFailed { index: usize, reason: String },
    #[error("empty grid")]
    EmptyGrid,
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
