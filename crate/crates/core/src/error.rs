use num_complex::Complex64;
use thiserror::Error;

/// Why a pointwise evaluation failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    Pole,
    BranchCut,
    Overflow,
    NotFinite,
}

impl std::fmt::Display for DomainKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DomainKind::Pole => "pole",
            DomainKind::BranchCut => "branch cut",
            DomainKind::Overflow => "overflow",
            DomainKind::NotFinite => "non-finite value",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("domain error ({kind}) at z = {z}")]
    Domain { kind: DomainKind, z: Complex64 },

    #[error("quadrature did not converge: estimate {estimate}, error {error:.3e} > tolerance {tol:.3e}")]
    QuadratureNonConvergence {
        estimate: Complex64,
        error: f64,
        tol: f64,
    },

    #[error("step size underflow at z = {z}")]
    StepUnderflow { z: Complex64 },

    #[error("maximum number of steps ({max_steps}) exceeded at z = {z}")]
    MaxSteps { max_steps: usize, z: Complex64 },

    #[error("zero of A on path near z = {z}")]
    ZeroOnPath { z: Complex64 },

    #[error("zero of f on or near the boundary circle (center {center}, radius {radius})")]
    BoundaryZero { center: Complex64, radius: f64 },

    #[error("argument-principle integral {value} is not close to an integer")]
    NonIntegerCount { value: f64 },

    #[error("iteration did not converge after {iterations} iterations (last change {last_change:.3e})")]
    NotConverged { iterations: usize, last_change: f64 },

    #[error("contraction condition violated: tail integral {tail} >= 1/2")]
    ContractionViolated { tail: f64 },

    #[error("singular point: {0}")]
    Singular(&'static str),

    #[error("mismatched node sets: {0}")]
    MismatchedNodes(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("estimate unavailable: {0}")]
    Estimate(String),

    #[error("unknown gallery entry `{0}`")]
    UnknownEntry(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn domain(kind: DomainKind, z: Complex64) -> Self {
        Error::Domain { kind, z }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Usage-type failures (bad expressions or arguments) as opposed to numerical ones.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Syntax { .. }
                | Error::UnknownIdentifier { .. }
                | Error::InvalidInput(_)
                | Error::UnknownEntry(_)
        )
    }
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

pub type Result<T> = std::result::Result<T, Error>;
