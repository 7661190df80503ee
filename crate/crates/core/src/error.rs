use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MelError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Distributed-datasets mode with no per-sample model coefficients leaves
    /// the linear time coefficient at zero, which the solver cannot handle.
    #[error("degenerate coefficients for node {node}: linear term is zero (S_d = 0 in distributed-datasets mode)")]
    DegenerateLinearTerm { node: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid sweep spec: {0}")]
    InvalidSweep(String),

    #[error("I/O error: {0}")]
    Io(String),

    #[error("serialization error: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, MelError>;

impl From<std::io::Error> for MelError {
    fn from(e: std::io::Error) -> Self {
        MelError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for MelError {
    fn from(e: serde_json::Error) -> Self {
        MelError::Serde(e.to_string())
    }
}

impl From<csv::Error> for MelError {
    fn from(e: csv::Error) -> Self {
        MelError::Serde(e.to_string())
    }
}

pub(crate) fn ensure(cond: bool, name: &'static str, reason: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(MelError::InvalidParameter {
            name,
            reason: reason.into(),
        })
    }
}
