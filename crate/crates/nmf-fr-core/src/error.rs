use alloc::string::String;

/// Errors raised by the core pipeline stages.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("all terms were filtered out; vocabulary is empty")]
    AllTermsFiltered,
    #[error("document frequency is zero for an in-vocabulary term")]
    ZeroDocumentFrequency,
    #[error("requested rank {requested} exceeds maximum {max}")]
    RankTooLarge { requested: usize, max: usize },
    #[error("SVD did not converge within {max_iter} sweeps (last residual change {residual:e})")]
    ConvergenceFailure { max_iter: usize, residual: f64 },
    #[error("matrix is entirely zero")]
    ZeroMatrix,
    #[error("need more records than neighbors: r = {r}, n = {n}")]
    TooFewRecords { r: usize, n: usize },
    #[error("only {found} pairwise-distinct rows available for {requested} seeds")]
    NotEnoughDistinctSeeds { requested: usize, found: usize },
    #[error("input lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("all paired differences are zero")]
    AllZeroDifferences,
    #[error("need at least 2 trials, got {0}")]
    TooFewTrials(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// An [`Error`] annotated with the pipeline stage that raised it.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("stage {stage}: {source}")]
pub struct StageError {
    pub stage: &'static str,
    pub source: Error,
}

impl StageError {
    pub fn new(stage: &'static str, source: Error) -> Self {
        Self { stage, source }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
