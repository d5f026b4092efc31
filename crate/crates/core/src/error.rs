use thiserror::Error;

/// Errors produced by the simulator and its analytics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    /// The explicit integrator blew up. `time_us` is the first sample time at
    /// which an entry exceeded the stability bound.
    #[error("integration became unstable at t = {time_us} us (|entry| = {magnitude:.3e})")]
    Integration { time_us: f64, magnitude: f64 },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
