use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: grid too coarse, bad window, unknown method...
    #[error("configuration error: {0}")]
    Config(String),

    /// Inputs that violate an operation's preconditions.
    #[error("input error: {0}")]
    Input(String),

    /// Argument outside the mathematical domain of a function (e.g. a
    /// non-positive time gap for the heat kernel).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure: {message} (step {step}, t = {time})")]
    Numerical { message: String, step: usize, time: f64 },

    /// The aggregation stage could not produce a usable curve.
    #[error("reconstruction failed: {0}")]
    Reconstruction(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    /// Process exit code for the CLI: 2 for bad inputs or configuration,
    /// 3 for numerical or pipeline failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Input(_) | Error::Domain(_) | Error::Json(_) | Error::Csv(_) => 2,
            Error::Io(_) => 2,
            Error::Numerical { .. } | Error::Reconstruction(_) => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
