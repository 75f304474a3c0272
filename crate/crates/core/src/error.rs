use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("operation requires at least one atom")]
    EmptyChain,

    #[error("steady-state denominator vanishes (|D| = {modulus:e}); zero dissipation?")]
    DegenerateDenominator { modulus: f64 },

    #[error("integration step size underflow at t = {time}")]
    StepSizeUnderflow { time: f64 },

    #[error("Bloch-sphere bound violated for atom {atom} at t = {time} (excess {excess:e})")]
    BlochViolation { atom: usize, time: f64, excess: f64 },

    #[error("steady state not reached by t = {time}; last residual {residual:e}")]
    NotConverged { time: f64, residual: f64 },

    #[error("Hilbert dimension {dimension} exceeds cap {cap}")]
    CapExceeded { dimension: usize, cap: usize },

    #[error("Fock truncation not converged: `{observable}` changed by {change:e} (relative) at cutoff {cutoff}")]
    TruncationNotConverged {
        observable: String,
        cutoff: usize,
        change: f64,
    },

    #[error("Liouvillian null space is degenerate: {0}")]
    DegenerateNullSpace(String),

    #[error("linear solve failed: {0}")]
    LinearAlgebra(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("no feasible operating point: {0}")]
    Infeasible(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
