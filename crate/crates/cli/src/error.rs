use gauge_core::funcdsl::ParseError;
use gauge_core::{BuildError, EvalError};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot parse {label} = {text:?}: {error}")]
    Parse { label: String, text: String, error: ParseError },
    #[error("build failed: {0}")]
    Build(#[from] BuildError),
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Parse { .. } => 2,
            CliError::Build(_) | CliError::Eval(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}
