use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid cycle form: {0}")]
    InvalidCycles(String),

    #[error("size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("tie in the {coordinate} coordinate at value {value}")]
    Tie { coordinate: char, value: f64 },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("inconsistent Z-array: {0}")]
    InconsistentZ(String),

    #[error("budget exceeded: {required} > {budget}")]
    Budget { required: u128, budget: u128 },

    #[error("not supported: {0}")]
    Unsupported(String),

    #[error("state is unreachable: {0}")]
    Unreachable(String),

    #[error("unstable queue: traffic intensity {0} >= 1")]
    Unstable(f64),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by malformed or unusable input data.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Tie { .. }
                | Error::InvalidData(_)
                | Error::Parse { .. }
                | Error::InconsistentZ(_)
                | Error::InvalidPermutation(_)
                | Error::InvalidCycles(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
