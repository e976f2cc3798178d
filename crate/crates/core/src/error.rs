use faer::c64;
use thiserror::Error;

/// Errors raised by the identification toolchain.
///
/// Variants split into two families that the CLI maps onto distinct exit
/// codes: input validation problems and numerical failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("singular shift: s = {s} is (numerically) a pole of the realization")]
    SingularShift { s: c64 },

    #[error("coincident interpolation points: left index {i} and right index {j} share the value {point}")]
    CoincidentPoints { i: usize, j: usize, point: c64 },

    #[error("requested order {requested} exceeds the numerical rank {rank}")]
    OrderTooLarge { requested: usize, rank: usize },

    #[error("shift matrix is not positive: smallest eigenvalue of D_s + D_s^T is {min_eig:.3e}")]
    NonPositiveShift { min_eig: f64 },

    #[error("eigenvalues on the imaginary axis: {0:?}")]
    AxisEigenvalues(Vec<c64>),

    #[error("spectral zero count mismatch: expected {expected} in the open right half-plane, found {found} ({near_axis} within the near-axis band)")]
    ZeroCount {
        expected: usize,
        found: usize,
        near_axis: usize,
    },

    #[error("Loewner matrix is not positive definite (smallest eigenvalue {min_eig:.3e}); increase the shift or enable stabilization")]
    Indefinite { min_eig: f64 },

    #[error("oracle evaluation failed at omega = {omega}: {source}")]
    Oracle {
        omega: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn at_step(self, step: usize) -> Self {
        Error::Step {
            step,
            source: Box::new(self),
        }
    }

    pub fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True for errors caused by bad user input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Dimension(_)
            | Error::Invalid(_)
            | Error::NonPositiveShift { .. }
            | Error::OrderTooLarge { .. }
            | Error::CoincidentPoints { .. }
            | Error::Io { .. }
            | Error::Parse(_) => true,
            Error::Step { source, .. } | Error::Stage { source, .. } | Error::Oracle { source, .. } => {
                source.is_validation()
            }
            _ => false,
        }
    }

    /// Innermost pipeline stage tag, if any.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            Error::Stage { stage, .. } => Some(stage),
            Error::Step { source, .. } | Error::Oracle { source, .. } => source.stage(),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
