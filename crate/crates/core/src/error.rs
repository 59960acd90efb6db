use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// The configuration cannot describe a valid experiment.
    #[error("configuration error: {0}")]
    Config(String),
    /// An operation was called outside its contract.
    #[error("usage error: {0}")]
    Usage(String),
    #[error("parse error at token {position} ({token:?}): {reason}")]
    Parse {
        position: usize,
        token: String,
        reason: String,
    },
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    /// A loss or gradient stopped being finite.
    #[error("numerical error: {0}")]
    Numerical(String),
    /// A training invariant was violated; carries a short state dump.
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    /// Short machine-readable kind, used by the CLI's one-line error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Usage(_) => "usage",
            Error::Parse { .. } => "parse",
            Error::Shape { .. } => "shape",
            Error::Numerical(_) => "numerical",
            Error::Invariant(_) => "invariant",
        }
    }
}

macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$kind(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;
