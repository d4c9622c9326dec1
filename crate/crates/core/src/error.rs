use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid mismatch: expected {expected} points, got {got}")]
    GridMismatch { expected: usize, got: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("CFL violation: dt = {dt} exceeds cfl_safety * dx = {cfl_safety} * {dx}")]
    Cfl { dt: f64, dx: f64, cfl_safety: f64 },

    #[error("non-finite value at t = {t} (node {index})")]
    NonFinite { t: f64, index: usize },

    #[error("reduced trajectory blew up at t = {t} (|y| = {magnitude})")]
    BlowUp { t: f64, magnitude: f64 },

    #[error("negative time {0} is not allowed")]
    NegativeTime(f64),

    #[error("stationary set is not discrete: {0}")]
    NonDiscrete(String),

    #[error("no soliton for omega = {omega}: {reason}")]
    NoSoliton { omega: f64, reason: String },

    #[error("series of {len} samples is shorter than the window of {window}")]
    WindowTooLong { len: usize, window: usize },

    #[error("track too short: {0}")]
    TrackTooShort(String),

    #[error("I/O failure: {0}")]
    Io(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
