use thiserror::Error;

use crate::network::EdgeId;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes across the crate. Graph construction, estimation and the
/// solvers share one error type so that campaign-level code can propagate
/// everything uniformly.
#[derive(Debug, Error)]
pub enum Error {
    #[error("fluctuation must be positive on edge {0}")]
    NonPositiveFluctuation(EdgeId),
    #[error("duplicate edge {0}")]
    DuplicateEdge(EdgeId),
    #[error("vertex index {index} out of range for {m} quantities")]
    IndexOutOfRange { index: usize, m: usize },
    #[error("edge {0} has no per-sample cost")]
    MissingCost(EdgeId),
    #[error("every quantity is marked as known; nothing left to estimate")]
    AllKnown,
    #[error("graph does not connect every quantity to the origin")]
    Disconnected,
    #[error("allocation references edge {0} absent from the network")]
    UnknownEdge(EdgeId),
    #[error("allocation entry for edge {edge} is negative ({value})")]
    NegativeAllocation { edge: EdgeId, value: f64 },
    #[error("allocation sums to {sum} but the budget is {budget}")]
    BudgetMismatch { sum: f64, budget: f64 },
    #[error("Fisher information is singular: some quantity has no measured path to the origin")]
    SingularInformation,
    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,
    #[error("no feasible allocation: the permitted edges cannot connect every quantity to the origin")]
    Infeasible,
    #[error("fluctuations must be in ascending order")]
    NotSorted,
    #[error("sparse design spec is infeasible: {0}")]
    InfeasibleSpec(String),
    #[error("divergence is infinite: current allocation funds edge {0} outside the target support")]
    InfiniteDivergence(EdgeId),
    #[error("no ground truth available for simulation")]
    TruthMissing,
    #[error("edge {edge} was given {samples} samples; at least 2 are needed for an empirical fluctuation")]
    TooFewSamples { edge: EdgeId, samples: f64 },
    #[error("allocation puts {value} samples on tree edge {edge}")]
    ZeroAllocationOnTreeEdge { edge: EdgeId, value: f64 },
    #[error("allocation funds edge {0}, which is not part of the tree")]
    AllocationOffTree(EdgeId),
    #[error("missing fluctuation estimate for edge {0}")]
    MissingEstimate(EdgeId),
    #[error("schedule of total budgets must be strictly increasing and non-empty")]
    BadSchedule,
    #[error("measurement on edge {edge} is invalid: {reason}")]
    InvalidMeasurement { edge: EdgeId, reason: &'static str },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("parse error: {0}")]
    Parse(String),
}
