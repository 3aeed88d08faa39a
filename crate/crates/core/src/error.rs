use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid rotation vector: {0}")]
    InvalidRotation(String),

    #[error("orbit length must be at least 1")]
    EmptyOrbit,

    #[error("invalid sampling function: {0}")]
    InvalidFunction(String),

    #[error("mollifier kernel half-width {half_width} is not below half the smallest arc ({min_arc})")]
    KernelTooWide { half_width: f64, min_arc: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("non-finite potential value {value} at step {step}")]
    NonFinitePotential { value: f64, step: usize },

    #[error("point {0} is not in the open upper half-plane")]
    NotInHalfPlane(Complex64),

    #[error("Möbius denominator vanished")]
    SingularMobius,

    #[error(
        "m-function iteration did not converge after {iterations} steps \
         (last iterate {last}, last difference {last_difference:e}, contraction ratio {contraction:.4})"
    )]
    NoConvergence {
        iterations: usize,
        last: Complex64,
        last_difference: f64,
        contraction: f64,
    },

    #[error("quadrature did not reach tolerance {tolerance:e} (estimated error {estimate:e})")]
    Quadrature { tolerance: f64, estimate: f64 },

    #[error("energy {energy} is outside the open interval ({lo}, {hi})")]
    EnergyOutOfDomain { energy: f64, lo: f64, hi: f64 },

    #[error("tables are misaligned: {0}")]
    Misaligned(String),

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }
}
