use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error("meshing failed: {0}")]
    Meshing(String),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("ill-conditioned system: {what} (condition estimate {estimate:.3e})")]
    IllConditioned { what: String, estimate: f64 },
    #[error("invalid configuration field `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by user input rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Parameter(_) | Error::Validation { .. } | Error::Json(_) | Error::Meshing(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
