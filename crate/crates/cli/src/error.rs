use thiserror::Error;

/// Failures surfaced to the shell, each with its own exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("no command given")]
    Empty,
    #[error("{0}")]
    Clap(clap::Error),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("internal assertion failed: {0}")]
    Assertion(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Empty => 1,
            CliError::Clap(e) => e.exit_code(),
            CliError::Usage(_) => 2,
            CliError::Resource(_) => 3,
            CliError::Assertion(_) => 4,
            CliError::Io(_) => 5,
        }
    }
}

impl From<skewwalk::Error> for CliError {
    fn from(e: skewwalk::Error) -> Self {
        use skewwalk::Error as E;
        match e {
            E::InvalidAlpha(_) | E::Domain(_) => CliError::Usage(e.to_string()),
            E::Resource { .. } => CliError::Resource(e.to_string()),
            E::InvalidPmf(_) => CliError::Assertion(e.to_string()),
        }
    }
}
