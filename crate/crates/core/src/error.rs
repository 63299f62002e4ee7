use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the documented domain of an operation.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A function value was NaN or infinite where a finite value is required.
    #[error("non-finite value: {0}")]
    NumericalDomain(String),

    #[error("root not found: {0}")]
    RootNotFound(String),

    /// The ODE integrator could not continue; carries the last accepted state.
    #[error("integration failed at t = {t}: {reason}")]
    IntegrationFailure { t: f64, state: Vec<f64>, reason: String },

    #[error("profile has no zero before theta_min = {theta_min}")]
    NoZero { theta_min: f64 },

    #[error("singular state: {0}")]
    Singular(String),

    /// Adaptive quadrature did not reach the requested tolerance.
    #[error("quadrature did not converge: estimate {estimate}, error {error_estimate}")]
    Accuracy { estimate: f64, error_estimate: f64 },

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("outside domain: {0}")]
    Domain(String),

    #[error("step size failure: {0}")]
    StepSize(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of a numerical method (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NumericalDomain(_)
                | Error::RootNotFound(_)
                | Error::IntegrationFailure { .. }
                | Error::NoZero { .. }
                | Error::Singular(_)
                | Error::Accuracy { .. }
                | Error::StepSize(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
