use thiserror::Error;

/// Which end of the half-line an integrability condition fails at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    Origin,
    Tail,
}

impl std::fmt::Display for End {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            End::Origin => write!(f, "origin"),
            End::Tail => write!(f, "tail"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("derivative of order {order} unsupported (potential provides up to {max})")]
    UnsupportedOrder { order: usize, max: usize },
    #[error("potential is not integrable at the {0}")]
    NonIntegrable(End),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("convergence failure: {0}")]
    Convergence(String),
    #[error("singular configuration: charged particles {i} and {j} coincide at x = {x}")]
    SingularConfiguration { i: usize, j: usize, x: f64 },
    #[error("step size underflow at t = {t} (h = {h:e}) without a detectable collision; state: {dump}")]
    Stiffness { t: f64, h: f64, dump: String },
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("degenerate gradient at x = {0}")]
    DegenerateGradient(f64),
    #[error("tolerance not met: {0}")]
    Tolerance(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("configuration error: {0}")]
    Config(String),
    /// Failure of one member of a sweep over particle numbers.
    #[error("run with n = {n} failed: {source}")]
    Run { n: usize, source: Box<Error> },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
