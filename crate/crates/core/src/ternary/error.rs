use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum QuantError {
    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("empty input")]
    Empty,
    #[error("invalid trit {value} at index {index}; expected -1, 0 or +1")]
    InvalidTrit { index: usize, value: i8 },
    #[error("reserved code 0b11 at trit {index}: corrupted packed data")]
    ReservedCode { index: usize },
    #[error("packed buffer holds {available} trits, {requested} requested")]
    ShortBuffer { available: usize, requested: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("column count {0} exceeds the i32 accumulator bound")]
    TooManyColumns(usize),
    #[error("activation value {value} at index {index} outside ±127")]
    ActivationRange { index: usize, value: i8 },
    #[error("invalid scale {0}; must be positive and finite")]
    InvalidScale(f64),
    #[error("bad weight block: {0}")]
    BadBlock(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for QuantError {
    fn from(e: std::io::Error) -> Self {
        QuantError::Io(e.to_string())
    }
}
