use thiserror::Error;

use crate::transport::TransportPlan;

/// Errors raised by the planner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed scenario document: {0}")]
    Parse(String),

    #[error("invalid field `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("allocation has {found} entries, scenario has {expected} factories")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("allocation entry {index} is negative ({value})")]
    NegativeEntry { index: usize, value: i64 },

    #[error("allocation sums to {found}, order is {expected} (sum ≠ Y)")]
    SumMismatch { expected: u64, found: u64 },

    #[error("aggregate inventory cannot cover the order for materials {materials:?}")]
    Infeasible { materials: Vec<String> },

    #[error("plan needs {trucks} trucks, fleet has {limit}")]
    FleetExceeded {
        plan: Box<TransportPlan>,
        trucks: u64,
        limit: u64,
    },

    #[error("instance too large: {count} candidates exceeds limit {limit}")]
    InstanceTooLarge { count: u128, limit: u128 },

    #[error("negative quantity {0}")]
    NegativeQuantity(f64),

    #[error("pareto front is empty")]
    EmptyFront,

    #[error("no evaluated allocation satisfies the fleet limit")]
    NoFeasibleSolution,

    #[error("invalid parameter `{name}`: {message}")]
    InvalidParams { name: &'static str, message: String },
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
