use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical pipeline.
///
/// Variants fall into three families that the CLI maps onto exit codes:
/// violated mathematical hypotheses, numerical failures, and bad input.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time {t} is outside the trajectory domain [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },

    #[error("delay iterate left the known domain at depth {depth} (reached t = {time})")]
    EtaDepth { depth: usize, time: f64 },

    #[error("orbit left the admissible domain at t = {time}: {constraint}")]
    DomainExit { time: f64, constraint: String },

    #[error("delayed argument {delayed} precedes the history start {t_min} (at t = {time})")]
    DelayBeforeHistory { time: f64, delayed: f64, t_min: f64 },

    #[error("step size underflow at t = {time} (h = {h:e})")]
    StepUnderflow { time: f64, h: f64 },

    #[error("disk condition violated at block {block}: 1 - g = {one_minus_g}")]
    DiskConditionViolated {
        block: usize,
        one_minus_g: Complex64,
    },

    #[error("tail closure too short: need {needed} states, have {available}")]
    MissingTail { needed: usize, available: usize },

    #[error("state left the analytic strip at {location}")]
    StripExit { location: String },

    #[error("non-finite model value at {location}")]
    NonFinite { location: String },

    #[error("fixed-point iteration stalled after {iterations} sweeps (last update {last_update:e}, measured ratio {ratio:.4})")]
    NoConvergence {
        iterations: usize,
        last_update: f64,
        ratio: f64,
    },

    #[error("contraction factor {kappa:.4} is not below 1")]
    NotContractive { kappa: f64 },

    #[error("degenerate disk radius: boundary gap {r} is not positive")]
    DegenerateRadius { r: f64 },

    #[error("insufficient angular samples: have {have}, need at least {need}")]
    InsufficientSamples { have: usize, need: usize },

    #[error("no admissible (l, c): {0}")]
    Infeasible(String),

    #[error("hypothesis {condition} fails: {detail}")]
    AssumptionFailed { condition: String, detail: String },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

/// Coarse classification used for exit codes and report status strings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// A hypothesis of the theory does not hold for the model or orbit.
    Assumption,
    /// The numerics failed (step underflow, stalled iteration, ...).
    Numerical,
    /// Bad configuration or malformed input.
    Usage,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Stage { source, .. } => source.kind(),
            Error::DomainExit { .. }
            | Error::DiskConditionViolated { .. }
            | Error::StripExit { .. }
            | Error::Infeasible(_)
            | Error::AssumptionFailed { .. }
            | Error::NonFinite { .. } => ErrorKind::Assumption,
            Error::StepUnderflow { .. }
            | Error::NoConvergence { .. }
            | Error::NotContractive { .. }
            | Error::DegenerateRadius { .. }
            | Error::EtaDepth { .. }
            | Error::DelayBeforeHistory { .. }
            | Error::OutOfDomain { .. }
            | Error::MissingTail { .. } => ErrorKind::Numerical,
            Error::InvalidParameter { .. }
            | Error::InsufficientSamples { .. }
            | Error::Parse(_)
            | Error::Io(_) => ErrorKind::Usage,
        }
    }

    /// Wraps `self` with the pipeline stage that raised it.
    pub fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
