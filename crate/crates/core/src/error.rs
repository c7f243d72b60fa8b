use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Grid construction or resolution requirement violated.
    #[error("sizing: {0}")]
    Sizing(String),
    /// Two arrays that must share a grid have different lengths.
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    /// A field with zero L² mass where a positive mass is required.
    #[error("degenerate field: zero mass")]
    ZeroMass,
    /// An argument outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// A bracketing search found no sign change.
    #[error("no bracket: {0}")]
    NoBracket(String),
    /// Malformed input file or configuration.
    #[error("parse: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag for the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Sizing(_) => "sizing",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::ZeroMass => "zero_mass",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::NoBracket(_) => "no_bracket",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    /// True for errors caused by bad input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::NoBracket(_))
    }
}
