use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("model would have {requested} vertices, above the cap of {cap}")]
    SizeCap { requested: u64, cap: u64 },

    #[error("no annulus fits: window side {side} is smaller than the innermost box side {box_side}")]
    NoAnnulus { side: f64, box_side: f64 },

    #[error("parameter solver failed: {0}")]
    Solver(String),

    #[error("too few exceedances for a tail estimate: {found} < {required}")]
    TooFewExceedances { found: usize, required: usize },

    #[error("largest component has {0} vertices, need at least 2")]
    GiantTooSmall(usize),

    #[error("vertex {0} does not exist")]
    MissingVertex(usize),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) | Error::Config(_) | Error::SizeCap { .. } => 2,
            _ => 3,
        }
    }
}
