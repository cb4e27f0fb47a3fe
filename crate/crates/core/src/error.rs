use thiserror::Error;

use crate::grid::FluidState;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("size mismatch: expected {expected}, got {got} ({what})")]
    SizeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("CFL violation: outflow Courant number {courant:.4} exceeds 1 (cell {cell})")]
    Cfl { courant: f64, cell: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("tridiagonal solver breakdown at row {0}")]
    SolverBreakdown(usize),

    #[error("quadrature did not converge on [{a}, {b}] (residual estimate {residual:e})")]
    Quadrature { a: f64, b: f64, residual: f64 },

    #[error("unsupported pressure law: {0}")]
    UnsupportedLaw(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("{0}")]
    Validation(String),

    #[error("config parse error at line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },

    #[error("blow-up detected at t = {t}: {reason}")]
    BlowUp {
        t: f64,
        reason: String,
        snapshot: Box<FluidState>,
    },

    #[error("run aborted: {0}")]
    Aborted(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Parse { .. } => 2,
            _ => 3,
        }
    }
}
