use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("matrix is not Hermitian (deviation {deviation:.3e} exceeds {tolerance:.1e})")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("step size underflow at t = {t}: required step {step:.3e} below minimum {min_step:.3e}")]
    StepUnderflow { t: f64, step: f64, min_step: f64 },

    #[error("integration exceeded {0} steps")]
    TooManySteps(usize),

    #[error("non-finite state encountered at t = {0}")]
    NonFinite(f64),

    #[error("hierarchy with {requested} auxiliary operators exceeds the budget of {budget}")]
    BudgetExceeded { requested: usize, budget: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("Matsubara pole: {0}")]
    MatsubaraPole(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("averaging window [{start}, {end}] contains no samples")]
    EmptyWindow { start: f64, end: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("hierarchy truncation not converged (depth deviation {depth_deviation:.3e}, Matsubara deviation {matsubara_deviation:.3e}); rerun with --force to proceed anyway")]
    NotConverged { depth_deviation: f64, matsubara_deviation: f64 },

    #[error("I/O error: {0}")]
    Io(String),
}

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

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
