use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid coupling schedule: {0}")]
    InvalidSchedule(String),

    #[error("denominator magnitude {denom} below tolerance {tol} (relative to scale {scale})")]
    SingularDenominator { denom: f64, tol: f64, scale: f64 },

    #[error("quadrature did not converge: achieved error estimate {achieved:e}, requested {requested:e}")]
    QuadratureNonConvergence { achieved: f64, requested: f64 },

    #[error("ODE step size underflow at t = {t} (step {step:e})")]
    StepSizeUnderflow { t: f64, step: f64 },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("trace is {0}, expected 1")]
    InvalidTrace(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("attenuation factor magnitude {0} exceeds 1; unphysical")]
    UnphysicalAttenuation(f64),

    #[error("spectral profile is not normalized: sum |phi|^2 dk = {0}")]
    UnnormalizedProfile(f64),

    #[error("Fock grids do not match: {0}")]
    GridMismatch(String),

    #[error("register dimension {dim} exceeds the dense limit {max}")]
    RegisterTooLarge { dim: usize, max: usize },

    #[error("bisection bracket failure: f({lo}) = {f_lo}, f({hi}) = {f_hi} do not change sign")]
    BracketFailure { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
