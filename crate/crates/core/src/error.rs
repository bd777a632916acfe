use std::fmt;

use thiserror::Error;

/// A malformed program text: the token index where parsing stopped and the
/// tokens that would have been accepted there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub position: usize,
    pub expected: Vec<String>,
    pub found: Option<String>,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "syntax error at token {}: expected one of [{}], found {}",
            self.position,
            self.expected.join(", "),
            self.found.as_deref().unwrap_or("end of input")
        )
    }
}

impl std::error::Error for SyntaxError {}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("sampling budget exceeded: {0} consecutive rejections")]
    SamplingBudgetExceeded(usize),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("map text line {line}: {msg}")]
    MapFormat { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
