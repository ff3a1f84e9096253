use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A netlist diagnostic pinned to a source location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub origin: String,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: line {}, column {}: {}",
            self.origin, self.line, self.column, self.message
        )
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("node '{node}' has no DC path to ground")]
    FloatingNode { node: String },

    #[error("singular system matrix at unknown '{unknown}'")]
    Singular { unknown: String },

    #[error("solution diverged at t = {time:e} s")]
    Divergence { time: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("driver schedule: {0}")]
    Schedule(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("unknown preset '{name}'; available presets: {}", available.join(", "))]
    UnknownPreset { name: String, available: Vec<String> },

    #[error("analysis: {0}")]
    Analysis(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of the numerical engine rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Singular { .. } | Error::Divergence { .. })
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
