use thiserror::Error;

use crate::tree::NodeId;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The adversary asked for a step the current tree does not allow.
    #[error("rejected step: {0}")]
    RejectedStep(String),

    #[error("invalid node {0}: {1}")]
    InvalidNode(NodeId, String),

    /// A caller broke the step protocol, e.g. deleting a leaf that still carries mass.
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),

    #[error("topology mismatch: {0}")]
    TopologyMismatch(String),

    #[error("integration failure: {0}")]
    IntegrationFailure(String),

    #[error("deadend drain failed to converge: {0}")]
    DrainFailure(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("input error: {0}")]
    Input(String),

    /// A bug: an internal invariant did not hold.
    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
