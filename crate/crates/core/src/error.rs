use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("task graph has no nodes")]
    EmptyGraph,
    #[error("every root IK candidate of node {node} was rejected by the root-proximity threshold")]
    NoFeasibleRoot { node: usize },
    #[error("task at ({x:.4}, {y:.4}) has no valid IK solution")]
    NoIkSolutions { x: f64, y: f64 },
    #[error("no path between nodes {from} and {to} inside map {map}")]
    Disconnected { map: usize, from: usize, to: usize },
    #[error("seed trajectory is invalid and could not be repaired (segment {segment})")]
    SeedInvalid { segment: usize },
    #[error("fallback planner gave up after {iterations} iterations")]
    Timeout { iterations: usize },
    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),
    #[error("tasks belong to different base poses ({0:?} vs {1:?})")]
    BaseMismatch(Option<usize>, Option<usize>),
}
