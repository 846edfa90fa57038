use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("alpha must lie in (0,1), got {0}")]
    InvalidAlpha(f64),

    #[error("invalid lattice pmf: {0}")]
    InvalidPmf(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("resource limit exceeded: {what} = {requested} (limit {limit})")]
    Resource {
        what: &'static str,
        requested: u64,
        limit: u64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
