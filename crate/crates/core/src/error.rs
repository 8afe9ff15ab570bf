use thiserror::Error;

/// Errors raised by the numerical kernels, the model layer and the inference drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("quadrature did not converge after {subdivisions} subdivisions (best estimate {estimate:e}, error {error:e})")]
    Quadrature {
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("no sign change on [{lo}, {hi}]: f(lo)={f_lo:e}, f(hi)={f_hi:e}")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("matrix is not positive definite after jitter {jitter:e}")]
    NotPositiveDefinite { jitter: f64 },

    #[error("correlation matrix repair failed; worst site pair ({0}, {1})")]
    CorrelationRepair(usize, usize),

    #[error("non-finite pairwise term at pair ({site1}, {site2}), replicate {replicate}")]
    NonFiniteTerm {
        site1: usize,
        site2: usize,
        replicate: usize,
    },

    #[error("optimisation failed: {0}")]
    Optimization(String),

    #[error("target {target} unreachable; attainable range [{min}, {max}]")]
    Unreachable { target: f64, min: f64, max: f64 },

    #[error("empirical probability is zero; try a lower level z")]
    ZeroEmpiricalProbability,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// `true` for failures of a numerical routine rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Quadrature { .. }
                | Error::NoSignChange { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::CorrelationRepair(..)
                | Error::NonFiniteTerm { .. }
                | Error::Optimization(_)
                | Error::Unreachable { .. }
                | Error::ZeroEmpiricalProbability
        )
    }
}
