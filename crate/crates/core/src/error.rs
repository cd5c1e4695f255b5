use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "combinatorial budget exceeded: {candidates} candidate supports > budget {budget}; \
         use the heuristic selector instead"
    )]
    CombinatorialBudget { candidates: u128, budget: u128 },

    #[error("infeasible selection constraints: {0}")]
    Infeasible(String),

    #[error("iterative hard thresholding diverged at iteration {iteration}")]
    Divergence { iteration: usize },

    #[error("singular design for arm `{arm}`")]
    SingularDesign { arm: String },

    #[error("arm `{arm}` has no rows in the table")]
    MissingArm { arm: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invariant violated (seed {seed}): {message}")]
    Invariant { seed: u64, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Process exit code for the CLI: 1 for configuration problems, 2 for
    /// invariant violations, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invariant { .. } => 2,
            _ => 1,
        }
    }
}
