//! Crate error type.

use thiserror::Error;

/// Errors produced by the simulator and analysis layers.
#[derive(Debug, Error)]
pub enum Error {
    /// Configuration rejected; every problem found is listed with its key path.
    #[error("invalid configuration:\n{}", .issues.join("\n"))]
    Config { issues: Vec<String> },

    /// A transport plan that cannot be realised (zero sweep speed, etc).
    #[error("invalid transport plan: {0}")]
    InvalidPlan(String),

    /// A rate function went negative while sampling counts.
    #[error("model error: negative rate {rate} at t = {time_s} s")]
    NegativeRate { rate: f64, time_s: f64 },

    /// Malformed analysis input (trace too short, mismatched shapes, ...).
    #[error("input error: {0}")]
    Input(String),

    /// The least-squares normal matrix is singular.
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    /// Requested statistic cannot be computed from the given data.
    #[error("not computable: {0}")]
    NotComputable(String),

    /// Scenario runtime failure; the seed is carried for replay.
    #[error("scenario runtime error (replay with seed {seed}): {message}")]
    Runtime { seed: u64, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Build a configuration error from a list of itemised issues.
    pub fn config(issues: Vec<String>) -> Self {
        Error::Config { issues }
    }

    /// Process exit code for the CLI: 1 validation, 2 runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 1,
            _ => 2,
        }
    }
}
