use thiserror::Error;

/// Diagnostics attached to a quadrature that failed to meet its tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureFailure {
    pub lower: f64,
    pub upper: f64,
    pub estimate: f64,
    pub error_estimate: f64,
    pub subdivisions: usize,
}

impl std::fmt::Display for QuadratureFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "quadrature on [{}, {}] did not converge after {} subdivisions (estimate {:.6e}, error {:.3e})",
            self.lower, self.upper, self.subdivisions, self.estimate, self.error_estimate
        )
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A numerical procedure failed to converge.
    #[error("numeric error: {0}")]
    Quadrature(QuadratureFailure),
    /// A numeric series or search did not converge.
    #[error("numeric error: {0}")]
    Convergence(String),
    /// A caller-supplied evaluator broke its contract, e.g. a CCDF outside [0, 1].
    #[error("contract violation: {0}")]
    Contract(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures of numerical procedures (as opposed to bad inputs).
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Quadrature(_) | Error::Convergence(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
