use thiserror::Error;

/// Process exit codes used by the CLI for each error class.
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_GEOMETRY: i32 = 3;
pub const EXIT_OUT_OF_REGIME: i32 = 4;
pub const EXIT_NON_CONVERGENCE: i32 = 5;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("out of regime: {0}")]
    OutOfRegime(String),

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => EXIT_CONFIG,
            Error::Geometry(_) => EXIT_GEOMETRY,
            Error::OutOfRegime(_) => EXIT_OUT_OF_REGIME,
            Error::NonConvergence(_) | Error::Solver(_) => EXIT_NON_CONVERGENCE,
            Error::Io(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
