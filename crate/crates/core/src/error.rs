use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("signal grids do not match: dt {left_dt} vs {right_dt}, len {left_len} vs {right_len}")]
    GridMismatch {
        left_dt: f64,
        right_dt: f64,
        left_len: usize,
        right_len: usize,
    },

    #[error("{name} = {value} is outside {expected}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("basis function at {frequency} rad/s has {samples_per_period:.2} samples per period (need at least 10)")]
    Resolution { frequency: f64, samples_per_period: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("simulation diverged at sample {index} (t = {time})")]
    Divergence { index: usize, time: f64 },

    #[error("sample budget exceeded: K = {k:.4e} exceeds cap {cap}")]
    BudgetExceeded { k: f64, cap: u64 },

    #[error("input space is infeasible: accepted {accepted} of {attempts} draws")]
    InfeasibleSpace { accepted: usize, attempts: usize },

    #[error("no usable data: {0}")]
    NoData(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("solver did not converge after {iterations} iterations (duality gap {gap:.3e})")]
    Convergence { iterations: usize, gap: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for command-line front ends.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::GridMismatch { .. }
            | Error::OutOfRange { .. }
            | Error::InvalidArgument(_)
            | Error::Resolution { .. }
            | Error::Dimension { .. }
            | Error::InfeasibleSpace { .. }
            | Error::NoData(_)
            | Error::Json(_) => 2,
            Error::BudgetExceeded { .. } => 3,
            Error::Divergence { .. } | Error::DegenerateData(_) | Error::Convergence { .. } => 4,
            Error::Io(_) => 1,
        }
    }

    pub(crate) fn range(name: &'static str, value: f64, expected: impl Into<String>) -> Self {
        Error::OutOfRange {
            name,
            value,
            expected: expected.into(),
        }
    }
}
