use thiserror::Error;

/// Errors raised by configuration loading and the numerical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot parse config: {0}")]
    Parse(String),

    #[error("invalid config: {0}")]
    Validation(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("numerics: {0}")]
    Numerics(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Short stable tag for machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse(_) => "parse",
            Error::Validation(_) => "validation",
            Error::Infeasible(_) => "infeasible",
            Error::Numerics(_) => "numerics",
            Error::Io { .. } => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
