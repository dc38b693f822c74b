use thiserror::Error;

/// A parameter or configuration value that violates its constraint.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid `{field}`: {constraint}")]
pub struct ParamError {
    pub field: String,
    pub constraint: String,
}

impl ParamError {
    pub fn new(field: impl Into<String>, constraint: impl Into<String>) -> Self {
        Self { field: field.into(), constraint: constraint.into() }
    }

    /// Prefixes the field path, e.g. `alpha` becomes `mfd.alpha`.
    pub fn within(mut self, parent: &str) -> Self {
        self.field = format!("{parent}.{}", self.field);
        self
    }
}

pub(crate) fn ensure(field: &str, ok: bool, constraint: &str) -> Result<(), ParamError> {
    if ok {
        Ok(())
    } else {
        Err(ParamError::new(field, constraint))
    }
}

pub(crate) fn finite_pos(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("step {step}: state field `{field}` is not finite")]
    NonFinite { step: u64, field: &'static str },
    #[error("step {step}: state field `{field}` went negative ({value:e})")]
    Negative { step: u64, field: &'static str, value: f64 },
    #[error("step {step}: no viable ride-hailing alternative (all disutilities infinite)")]
    NoViableAlternative { step: u64 },
    #[error("gridlock at step {step}: a subnetwork speed reached zero")]
    Gridlock { step: u64 },
    #[error("no fixed point after {iters} iterations (last change {residual:e})")]
    NotConverged { iters: usize, residual: f64 },
    #[error("demand requested at t = {t} hr outside [0, {horizon}] hr")]
    DemandOutOfRange { t: f64, horizon: f64 },
    #[error("controller failed at step {step}: {message}")]
    Controller { step: u64, message: String },
}
