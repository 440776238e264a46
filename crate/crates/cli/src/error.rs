use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, names or config file contents.
    #[error("{0}")]
    Config(String),
    #[error("integration failed: {0}")]
    Integration(#[from] relax_mprk_core::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Integration(_) | CliError::Io { .. } => 1,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().display().to_string(), source }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
