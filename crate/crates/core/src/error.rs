use thiserror::Error;

/// Errors raised by the core solver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("position x = {x} lies outside [0, {length}]")]
    Domain { x: f64, length: f64 },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    Parameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("non-finite value in {field} at index {index}")]
    NonFinite { field: &'static str, index: usize },

    #[error("step size {dt:e} fell below dt_min = {dt_min:e} at t = {t}")]
    StiffnessAbort { t: f64, dt: f64, dt_min: f64 },

    #[error("step budget of {max_steps} accepted/rejected steps exhausted at t = {t}")]
    StepBudget { t: f64, max_steps: usize },

    #[error("linear solve failed in implicit stage at t = {t}")]
    SingularMatrix { t: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_finite(field: &'static str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { field, index }),
        None => Ok(()),
    }
}
