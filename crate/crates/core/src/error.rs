use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid rational literal {0:?} (expected \"p/q\" or an integer)")]
    RationalLiteral(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("{what} = {value} is out of range ({range})")]
    OutOfRange {
        what: &'static str,
        value: String,
        range: String,
    },

    #[error("{what} has size {size}, above the enumeration cap {cap}")]
    CapExceeded {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("empty face: the allowed support must contain at least one index")]
    EmptyFace,

    #[error("invalid reduction parameters: {0}")]
    InvalidParams(String),

    #[error("inadmissible rectangle input: {0}")]
    Inadmissible(String),

    #[error("empty parameter interval for n = {n}, {regime}")]
    EmptyInterval { n: usize, regime: String },

    #[error("internal consistency failure: {0}")]
    InternalConsistency(String),

    #[error("invalid game file: {0}")]
    GameFormat(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// True for failures that indicate a bug rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::InternalConsistency(_))
    }
}
