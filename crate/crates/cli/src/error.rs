pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] stc_core::Error),
    #[error("{0}")]
    Invalid(String),
    #[error("{stage} needs {path}; run `stc {producer}` first")]
    MissingArtifact {
        stage: &'static str,
        path: String,
        producer: &'static str,
    },
    #[error("manifest {path}: {msg}")]
    Manifest { path: String, msg: String },
}

impl CliError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError::Invalid(msg.into())
    }

    /// Process exit status: 2 for numeric failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numeric() => 2,
            _ => 1,
        }
    }
}
