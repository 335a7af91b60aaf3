use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid modulus {0}: expected an odd prime below 2^20")]
    InvalidModulus(u64),

    #[error("incompatible fields: (p={0}, n={1}) vs (p={2}, n={3})")]
    IncompatibleField(u64, u64, u64, u64),

    #[error("bad reduction at p={0}")]
    BadReduction(u64),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("unsupported genus {0}: {1}")]
    UnsupportedGenus(usize, &'static str),

    #[error("internal inconsistency: {0}")]
    Inconsistency(String),

    #[error("invalid endomorphism data: {0}")]
    InvalidEndoData(String),

    #[error("invalid galois data: {0}")]
    InvalidGalois(String),

    #[error("unknown group element {0}")]
    UnknownElement(usize),

    #[error("elements {0:?} do not form a subgroup")]
    NotASubgroup(Vec<usize>),

    #[error(
        "no catalog identity component with lie_dim={lie_dim} (g={g}, center dim {center_dim})"
    )]
    UnknownComponent {
        g: usize,
        lie_dim: usize,
        center_dim: usize,
    },

    #[error("embedding error: {0}")]
    Embedding(String),

    #[error("empty sample set")]
    EmptySample,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("splitting rule has no label for p={0}")]
    IncompleteRule(u64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
