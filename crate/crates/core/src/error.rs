use thiserror::Error;

use crate::constellation::NodeId;
use crate::partition::ConstraintViolation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shell: {0}")]
    InvalidShell(String),

    #[error("invalid ground station {name}: {reason}")]
    InvalidGroundStation { name: String, reason: String },

    #[error("unknown preset {0:?}")]
    UnknownPreset(String),

    #[error("invalid time sampling: {0}")]
    InvalidSampling(String),

    #[error("traffic scale gamma={0} outside [0, 1]")]
    InvalidGamma(f64),

    #[error("CORG weights alpha={alpha}, beta={beta} must be nonnegative with alpha + beta <= 1")]
    InvalidCorgWeights { alpha: f64, beta: f64 },

    #[error("LEO {0} cannot reach its controller: disconnected domain")]
    DisconnectedDomain(NodeId),

    #[error("{} LEO(s) are not covered by any controller: {:?}", .0.len(), .0)]
    Uncoverable(Vec<NodeId>),

    #[error("no feasible perfect matching; infeasible clusters {0:?}")]
    InfeasibleMatching(Vec<usize>),

    #[error("assignment violates {} constraint(s): {}", .0.len(), summarize(.0))]
    ConstraintViolation(Vec<ConstraintViolation>),

    #[error("instance too large for exhaustive search: {leos} LEOs (limit {limit})")]
    TooLarge { leos: usize, limit: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("codec: {0}")]
    Codec(#[from] crate::emulator::codec::CodecError),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn summarize(violations: &[ConstraintViolation]) -> String {
    violations.iter().take(5).map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
