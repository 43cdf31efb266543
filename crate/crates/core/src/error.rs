use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not symmetric positive definite: [[{a11}, {a12}], [{a12}, {a22}]]")]
    NotPositiveDefinite { a11: f64, a12: f64, a22: f64 },

    #[error("density must be positive, got {value} at ({x}, {y})")]
    NonPositiveDensity { value: f64, x: f64, y: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("time step {dt:e} violates the stability bound {limit:e}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("non-finite value encountered at step {step}")]
    NonFinite { step: usize },

    #[error("non-finite state in path {path} at step {step}")]
    NonFinitePath { path: usize, step: usize },

    #[error("ensembles are not coupled: {0}")]
    Uncoupled(String),

    #[error("singular normal equations in least-squares fit")]
    SingularFit,

    #[error("flow-map integration produced a non-finite value at t = {t}")]
    FlowIntegration { t: f64 },
}
