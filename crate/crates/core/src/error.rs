use thiserror::Error;

/// Errors raised by density evaluation, bridge construction and the numerical checks.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A structural precondition does not hold (e.g. an unstable drift matrix).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The ratio form of the bridge density cannot be used; the caller should
    /// switch to the limit construction.
    #[error("construction inapplicable: {0}")]
    ConstructionInapplicable(String),

    /// A numerical routine produced a result that failed its own validation.
    #[error("computation error: {message} (primary {primary:e}, reference {reference:e})")]
    Computation {
        message: String,
        primary: f64,
        reference: f64,
    },

    /// Adaptive quadrature ran out of subdivisions.
    #[error("quadrature did not converge: estimate {estimate:e}, error bound {error:e} after {subdivisions} subdivisions")]
    NonConvergence {
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
