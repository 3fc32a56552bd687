use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the engine. Axiom violations are not errors; they are
/// returned as report data.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("schema has more than {limit} outcomes")]
    TooLarge { limit: usize },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("conditioning undefined: {0} has probability zero")]
    ConditioningUndefined(String),

    #[error("missing kernel: {0}")]
    MissingKernel(String),

    #[error("cyclic SCM not compilable: {0}")]
    CyclicScm(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("{line}:{col}: syntax error: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    #[error("{line}:{col}: {msg}")]
    Semantic { line: usize, col: usize, msg: String },
}

impl Error {
    /// Process exit code for the command-line contract.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ConditioningUndefined(_) => 3,
            Error::MissingKernel(_) => 4,
            _ => 2,
        }
    }
}
