use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate curvature evaluation at z = {z}: |1 + z^2n| = {denominator:.3e}")]
    DegenerateEvaluation { z: Complex64, denominator: f64 },

    #[error("geometry violation: |1 + u*gamma| = {magnitude:.3e} at u = {u}")]
    GeometryViolation { u: f64, magnitude: f64 },

    #[error("numerical integration did not converge on [{a}, {b}] (error estimate {estimate:.3e})")]
    Quadrature { a: f64, b: f64, estimate: f64 },

    #[error("field direction on a regime boundary: eta = {eta}, eta - alpha0 = {relative}")]
    BoundaryDirection { eta: f64, relative: f64 },

    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix factorization failed: zero pivot in column {column}")]
    SingularPivot { column: usize },

    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),

    #[error("dense eigensolver failed: {0}")]
    Dense(String),

    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
