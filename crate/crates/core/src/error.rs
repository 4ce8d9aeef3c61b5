use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Coarse classification used by callers to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Resource,
    Numeric,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point coordinate {value} at index {index} is outside [0, 1]")]
    OutOfDomain { index: usize, value: f64 },

    #[error("{what}: {needed} exceeds the budget of {limit}{hint}")]
    Budget {
        what: &'static str,
        needed: u128,
        limit: u128,
        hint: &'static str,
    },

    #[error("density oracle returned non-positive value {value} at {point:?}")]
    NonPositiveOracle { point: Vec<f64>, value: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("malformed PGM header: {0}")]
    PgmHeader(String),

    #[error("unsupported PGM depth: maxval {0} (only 255 is supported)")]
    PgmDepth(u32),

    #[error("truncated PGM payload: expected {expected} bytes, found {found}")]
    PgmTruncated { expected: usize, found: usize },

    #[error("image corpus is empty")]
    EmptyCorpus,

    #[error("image dimensions {found:?} do not match the corpus dimensions {expected:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Budget { .. } => ErrorKind::Resource,
            Error::NonPositiveOracle { .. } | Error::Numeric(_) => ErrorKind::Numeric,
            _ => ErrorKind::Usage,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

/// Fails with [`Error::Budget`] when `needed > limit`.
pub(crate) fn check_budget(
    what: &'static str,
    needed: u128,
    limit: u128,
    hint: &'static str,
) -> Result<()> {
    if needed > limit {
        Err(Error::Budget {
            what,
            needed,
            limit,
            hint,
        })
    } else {
        Ok(())
    }
}
