// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite input `{0}`")]
    NonFinite(&'static str),

    #[error("singular {factor}: |value| = {magnitude:e}")]
    Singular { factor: &'static str, magnitude: f64 },

    #[error("step size underflow at t = {t:e} s (h = {h:e} s)")]
    StepUnderflow { t: f64, h: f64 },

    #[error("step budget of {max_steps} exhausted at t = {t:e} s")]
    TooManySteps { t: f64, max_steps: usize },

    #[error("insufficient sampling: {have:.2} points per reference period, need at least {need}")]
    InsufficientSampling { have: f64, need: usize },

    #[error("analysis window: {0}")]
    Window(String),

    #[error("steady state not reached: envelope drift {drift:.3e} exceeds {limit:.3e}")]
    NotConverged { drift: f64, limit: f64 },

    #[error("rank-deficient fit: unidentifiable direction {direction} (condition number {condition:e})")]
    RankDeficient { direction: String, condition: f64 },

    #[error("fit did not converge in {iterations} iterations (best cost {best_cost:e})")]
    FitNotConverged { iterations: usize, best_cost: f64 },

    #[error("config error at {pointer}: {reason}")]
    Config { pointer: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter { .. } | Error::NonFinite(_) | Error::Config { .. } | Error::Json(_) | Error::Csv(_) | Error::Io(_) => {
                2
            }
            _ => 3,
        }
    }
}

pub(crate) fn finite(name: &'static str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFinite(name))
    }
}
