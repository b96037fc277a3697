use thiserror::Error;

use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid threshold vector: {0}")]
    Thresholds(String),

    #[error("invalid utility profile: {}", join_violations(.0))]
    InvalidProfile(Vec<Violation>),

    #[error("invalid input profile: {0}")]
    InvalidInput(String),

    #[error("not a bijection: {0}")]
    NotABijection(String),

    #[error("agent {agent} receives {assigned} copies but has capacity {capacity}")]
    CapacityExceeded {
        agent: usize,
        assigned: usize,
        capacity: usize,
    },

    #[error("item {item} hands out {assigned} copies but has supply {supply}")]
    SupplyExceeded {
        item: usize,
        assigned: usize,
        supply: usize,
    },

    #[error("agent {agent} receives {assigned} copies of item {item}, limit is {limit}")]
    LimitExceeded {
        agent: usize,
        item: usize,
        assigned: usize,
        limit: usize,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("input profile thresholds do not match the mechanism thresholds")]
    ThresholdMismatch,

    #[error(
        "marginal values increase for agent {agent}, item {item} at copy {copy}; \
         the flow reduction needs nonincreasing marginals"
    )]
    IncreasingMarginals {
        agent: usize,
        item: usize,
        copy: usize,
    },

    #[error("flow network infeasible: required {required} units, routed {routed}")]
    InfeasibleFlow { required: i64, routed: i64 },

    #[error("agent {agent} has no consistent utility: lower bounds sum to {lo_sum}, upper bounds to {hi_sum}")]
    InfeasibleBox {
        agent: usize,
        lo_sum: f64,
        hi_sum: f64,
    },

    #[error("fractional maximization did not converge within {iterations} iterations (residual {residual:e})")]
    Divergence { iterations: usize, residual: f64 },

    #[error("{what} of size {size} exceeds the exact-enumeration limit {limit}")]
    SizeLimit {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
