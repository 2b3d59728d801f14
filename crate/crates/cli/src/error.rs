use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] homcluster::Error),
    #[error("{0}")]
    Usage(String),
    #[error("declared output `{0}` was not written")]
    MissingOutput(String),
    #[error("cannot create `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// Stable identifier printed on failure.
    pub fn class(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.class(),
            CliError::Usage(_) => "Usage",
            CliError::MissingOutput(_) => "MissingOutput",
            CliError::Io { .. } => "Io",
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
