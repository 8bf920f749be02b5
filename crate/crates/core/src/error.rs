use thiserror::Error;

/// Errors raised by the library. Each variant maps to one failure class of the lab.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("missing key `{0}`")]
    MissingKey(String),
    #[error("constraint violated: {0}")]
    ConstraintViolation(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("positivity lost at x = {x} (Re u = {value})")]
    PositivityLoss { x: f64, value: f64 },
    #[error("overflow: sup|u| = {0}")]
    Overflow(f64),
    #[error("Picard iteration failed to contract: {0}")]
    ContractionFailure(String),
    #[error("requested y-grid exceeds the spatial domain: {0}")]
    OutOfDomain(String),
    #[error("no root: {0}")]
    NoRoot(String),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("series too short: {0}")]
    SeriesTooShort(String),
    #[error("budget exhausted after {0} runs")]
    BudgetExhausted(usize),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
