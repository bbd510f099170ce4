use thiserror::Error;

/// Errors produced by file parsers, graph constructors and the design loop.
///
/// Parse-side variants carry the 1-based line number of the offending input
/// line so that a bad file can be fixed without guesswork.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: malformed header: {detail}")]
    MalformedHeader { line: usize, detail: String },

    #[error("line {line}: degree mismatch: {detail}")]
    DegreeMismatch { line: usize, detail: String },

    #[error("line {line}: index out of range: {detail}")]
    OutOfRange { line: usize, detail: String },

    #[error("line {line}: duplicate neighbor: {detail}")]
    DuplicateNeighbor { line: usize, detail: String },

    #[error("line {line}: {detail}")]
    Parse { line: usize, detail: String },

    #[error("row and column neighbor lists disagree: {0}")]
    Inconsistent(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("mismatch: {0}")]
    Mismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
