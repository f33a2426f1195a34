use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("characteristic roots are nearly degenerate (separation {separation:e})")]
    NearDegenerateRoots { separation: f64 },

    #[error("step {h:e} exceeds the admissible maximum {max:e}")]
    StepTooLarge { h: f64, max: f64 },

    #[error("estimated quadrature error {estimate:e} exceeds tolerance {tolerance:e}")]
    QuadratureTolerance { estimate: f64, tolerance: f64 },

    #[error("closed form denominator {which} is singular ({value:e})")]
    SingularDenominator { which: &'static str, value: f64 },

    #[error("covariance is degenerate (AC - B^2 = {det:e})")]
    DegenerateCovariance { det: f64 },

    #[error("value #{index} is not positive ({value:e})")]
    NonPositiveValue { index: usize, value: f64 },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("time {t} is not resolved by the response grid (step {h}, end {t_end})")]
    GridTooCoarse { t: f64, h: f64, t_end: f64 },

    #[error("operation requires the {expected} regime, roots are {found}")]
    RegimeMismatch {
        expected: &'static str,
        found: &'static str,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
