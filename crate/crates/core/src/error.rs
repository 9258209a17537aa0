use thiserror::Error;

/// Errors produced by state construction, map application and the oracle.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("unknown mode label `{0}`")]
    UnknownMode(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("negative variance {value} for {what}")]
    NegativeVariance { what: String, value: f64 },

    #[error("singular polariton angle: {0}")]
    SingularAngle(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("internal consistency check failed: {0}")]
    InternalDisagreement(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("truncation leak {leak:.3e} above the {bound:.3e} bound in mode `{mode}`")]
    TruncationLeak { mode: String, leak: f64, bound: f64 },

    #[error("stiffness: step size underflowed to {step:.3e} at t = {t:.6e}")]
    Stiffness { t: f64, step: f64 },

    #[error("unknown {kind} `{name}`; registered: {known}")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        known: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
