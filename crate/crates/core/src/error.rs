use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),
    #[error("alphabet violation: symbol {symbol:?} at position {position}")]
    AlphabetViolation { symbol: char, position: usize },
    #[error("alphabet mismatch")]
    AlphabetMismatch,
    #[error("insufficient history: need {needed} symbols, got {got}")]
    InsufficientHistory { needed: usize, got: usize },
    #[error("not a context tree: {0}")]
    NotAContextTree(String),
    #[error("enumeration too large: |A|={alphabet_size}, d_max={d_max}")]
    EnumerationTooLarge { alphabet_size: usize, d_max: usize },
    #[error("sequence too short: n={n} must exceed d_max+1={min}")]
    SequenceTooShort { n: usize, min: usize },
    #[error("zero denominator: context {0} is not feasible")]
    ZeroDenominator(String),
    #[error("not a probability vector: {0}")]
    NotAProbability(String),
    #[error("mismatched context sets")]
    MismatchedContexts,
    #[error("no admissible tree")]
    NoAdmissibleTree,
    #[error("no jump detected along the penalty path")]
    NoJumpDetected,
    #[error("penalty path is not monotone at grid index {index}: size {before} -> {after}")]
    PathNotMonotone { index: usize, before: usize, after: usize },
    #[error("penalty path complexity increases at grid index {index}: {before} -> {after}")]
    ComplexityNotMonotone { index: usize, before: f64, after: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("source model is not ergodic: {0}")]
    NotErgodic(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
