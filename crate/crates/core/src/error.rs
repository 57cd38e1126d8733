use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature hit its refinement limit before meeting the tolerance.
    #[error("quadrature did not converge: estimate {value:e}, error estimate {error:e}")]
    Quadrature { value: f64, error: f64 },

    /// The potential is too singular for the requested evaluation.
    #[error("regime error: {0}")]
    Regime(String),

    /// The requested quantity diverges for this potential (e.g. a derivative of
    /// the kernel on the diagonal when the repulsion is too singular).
    #[error("blow-up regime: {0}")]
    BlowUp(String),

    /// The implicit solve could not be completed even at the smallest step.
    #[error("step failed at t = {t}: dt = {dt:e} fell below dt_min, last residual {residual:e}")]
    StepFailure { t: f64, dt: f64, residual: f64 },

    /// The discrete state stopped representing a radial measure.
    #[error("state corruption at t = {t}: {reason}")]
    StateCorruption { t: f64, reason: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
