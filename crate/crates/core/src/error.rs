use thiserror::Error;

/// Errors produced by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("degenerate transform: {0}")]
    Degenerate(String),

    #[error("integration error: {0}")]
    Integration(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("wrong branch: {0}")]
    WrongBranch(String),

    #[error("not applicable: {0}")]
    Inapplicable(String),

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error("kernel is not positive semidefinite: min eigenvalue {min} vs largest {max}")]
    NotPsd { min: f64, max: f64 },

    #[error("root search window exhausted: found {found} of {wanted} roots below x = {limit}")]
    SearchWindow {
        found: usize,
        wanted: usize,
        limit: f64,
    },

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("numeric instability: {0}")]
    Instability(String),

    #[error("enumeration error: {0}")]
    Enumeration(String),

    #[error("index {index} out of range (len {len})")]
    OutOfRange { index: usize, len: usize },

    #[error("singular probe: {0}")]
    SingularProbe(String),

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by bad user input rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Parse { .. } | Error::Io(_) | Error::Unsupported(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
