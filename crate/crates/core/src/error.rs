use thiserror::Error;

/// Errors raised across the kinematics, planning and scheduling pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("inconsistent actuation: {0}")]
    InconsistentActuation(String),

    #[error("no plan found after {expansions} expansions")]
    NoPlan { expansions: usize },

    #[error("inverse kinematics did not converge (residual {residual:e})")]
    NoConvergence { residual: f64 },

    #[error("all {trials} benchmark trials failed")]
    AllTrialsFailed { trials: usize },

    #[error("no axial position covers tendons {tendons:?} with servos {servos:?}")]
    InfeasibleAssignment { tendons: Vec<usize>, servos: Vec<usize> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures of the algorithm itself (as opposed to bad input).
    pub fn is_algorithmic(&self) -> bool {
        matches!(self, Error::NoPlan { .. } | Error::NoConvergence { .. } | Error::AllTrialsFailed { .. } | Error::InfeasibleAssignment { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
