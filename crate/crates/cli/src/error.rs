use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config at `{field}`: {message}")]
    Parse { field: String, message: String },
    #[error("cannot read or write {path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Guard(String),
    #[error("{0}")]
    NonConvergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse { .. } | CliError::Io { .. } => 2,
            CliError::Guard(_) => 3,
            CliError::NonConvergence(_) => 4,
        }
    }
}
