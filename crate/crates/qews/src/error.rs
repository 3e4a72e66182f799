use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("numerical budget exceeded: {0}")]
    Numerical(qews_core::Error),
    #[error("{0}")]
    Core(qews_core::Error),
    #[error("I/O on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("reading {path}: {msg}")]
    Format { path: String, msg: String },
}

impl CliError {
    /// Process exit status: 2 config, 3 numerical budget, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Core(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } | CliError::Format { .. } => 4,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

impl From<qews_core::Error> for CliError {
    fn from(e: qews_core::Error) -> Self {
        use qews_core::Error as E;
        match e {
            E::TraceBudget { .. } | E::CutoffExhausted { .. } => CliError::Numerical(e),
            other => CliError::Core(other),
        }
    }
}
