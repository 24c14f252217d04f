use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("feature count {got} out of range 1..={max}")]
    Size { got: usize, max: usize },

    #[error("feature index {index} out of range for {len} features")]
    Index { index: usize, len: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("covariance block is singular after jitter (features: {})", .features.join(", "))]
    Singular { features: Vec<String> },

    #[error("no support row matches the conditioning values")]
    NoMatchingSupport,

    #[error("marginal of feature `{0}` has zero spread")]
    DegenerateMarginal(String),

    #[error("underdetermined fit: {rows} rows for {features} features")]
    Underdetermined { rows: usize, features: usize },

    #[error("oracle: {0}")]
    Oracle(String),

    #[error("model: {0}")]
    Model(String),

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("render: {0}")]
    Render(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        source: Box<Error>,
    },
}

impl Error {
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Strips stage labels.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}
