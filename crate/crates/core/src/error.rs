use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("matrix is singular to working precision")]
    Singular,

    #[error("matrix is not in SL(d, R): det = {det}")]
    NotSpecialLinear { det: f64 },

    #[error("{what} index {index} out of range (bound {bound})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        bound: usize,
    },

    #[error("invalid theta subset: {0}")]
    InvalidTheta(String),

    #[error("chamber margin {margin:.3e} does not exceed tolerance {tol:.3e}")]
    NotRegular { margin: f64, tol: f64 },

    #[error("degenerate evaluation: representative annihilated (norm {norm:.3e})")]
    DegenerateEvaluation { norm: f64 },

    #[error("orbit size cap of {cap} elements exceeded")]
    CapExceeded { cap: usize },

    #[error("sequence did not converge: tail increment {increment:.3e}")]
    NonConvergent { increment: f64 },

    #[error("no unbiased window: {0}")]
    NoUnbiasedWindow(String),

    #[error("total measure weight underflowed")]
    WeightUnderflow,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o failure: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
