use thiserror::Error;

/// Failure classes map one-to-one onto the CLI exit codes:
/// configuration/schema problems exit 2, numerical divergence exits 3,
/// violated domain preconditions exit 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),
    #[error("numerics: {0}")]
    Numerics(String),
    #[error("domain: {0}")]
    Domain(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Numerics(_) => 3,
            Error::Domain(_) => 4,
            Error::Io(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
