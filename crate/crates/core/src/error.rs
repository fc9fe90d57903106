use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "Matsubara sum did not converge after {terms} terms \
         (partial sum {partial_sum:e}, achieved relative tolerance {achieved_tol:e})"
    )]
    Convergence {
        partial_sum: f64,
        achieved_tol: f64,
        terms: usize,
    },

    #[error("quadrature did not reach tolerance: estimate {estimate:e}, error {abs_error:e}")]
    Quadrature { estimate: f64, abs_error: f64 },

    #[error("fit failed: {reason}")]
    FitFailure { reason: String, last: Vec<f64> },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("input line {line}: {message}")]
    Input { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
