use thiserror::Error;

/// Errors produced by the goodput models, the simulator and the optimizer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input lies outside the domain on which a quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A simulation or search configuration is inconsistent.
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

/// Rejects NaN and infinities, naming the offending argument.
pub(crate) fn finite(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(domain(format!("{name} must be finite, got {x}")))
    }
}

/// Checks that `x` is a probability in the half-open interval [0, 1).
pub(crate) fn probability(name: &str, x: f64) -> Result<f64> {
    if (0.0..1.0).contains(&x) {
        Ok(x)
    } else {
        Err(domain(format!("{name} must lie in [0, 1), got {x}")))
    }
}
