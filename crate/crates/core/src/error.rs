use std::path::PathBuf;

use crate::param::{BlockId, Domain};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unknown block {block:?} for layout with {sources} source block(s)")]
    UnknownBlock { block: BlockId, sources: usize },

    #[error("length mismatch in {context}: expected {expected}, got {actual}")]
    LengthMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("non-finite objective value while differencing coordinate {coordinate}")]
    NonFiniteValue { coordinate: usize },

    #[error("non-finite gradient for {domain} objective")]
    NonFiniteGradient { domain: Domain },

    #[error("non-finite loss for {domain} objective at the shifted point (rho too large?)")]
    ShiftedEvaluation { domain: Domain },

    #[error("point outside the objective domain: {0}")]
    OutOfDomain(String),

    #[error("iteration {t} out of range for schedule of {total} iterations")]
    IterationOutOfRange { t: usize, total: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty batch for {0} objective")]
    EmptyBatch(Domain),

    #[error("invalid probability vector at sample {index}: {reason}")]
    InvalidProbabilities { index: usize, reason: String },

    #[error("trace too short: {len} records, need at least {min}")]
    TraceTooShort { len: usize, min: usize },

    #[error("anchor training diverged at warmup step {step}")]
    AnchorDiverged { step: usize },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag used in CLI failure lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnknownBlock { .. } => "unknown_block",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::LayoutMismatch(_) => "layout_mismatch",
            Error::NonFiniteValue { .. } => "non_finite_value",
            Error::NonFiniteGradient { .. } => "non_finite_gradient",
            Error::ShiftedEvaluation { .. } => "shifted_evaluation",
            Error::OutOfDomain(_) => "out_of_domain",
            Error::IterationOutOfRange { .. } => "iteration_out_of_range",
            Error::InvalidConfig(_) => "invalid_config",
            Error::EmptyBatch(_) => "empty_batch",
            Error::InvalidProbabilities { .. } => "invalid_probabilities",
            Error::TraceTooShort { .. } => "trace_too_short",
            Error::AnchorDiverged { .. } => "anchor_diverged",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
        }
    }
}
