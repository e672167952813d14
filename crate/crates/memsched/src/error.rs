use crate::scheduler::SchedulingFailure;
use crate::workflow::TaskId;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("workflow contains a cycle{0}")]
    Cycle(String),
    #[error("duplicate task id {0}")]
    DuplicateId(TaskId),
    #[error("unknown task {0}")]
    UnknownTask(String),
    #[error("invalid {what}: {detail}")]
    InvalidValue { what: &'static str, detail: String },
    #[error("infeasible generator parameters: {0}")]
    InfeasibleParams(String),
    #[error("exact traversal supports at most {limit} tasks, workflow has {n}")]
    ExactThresholdExceeded { n: usize, limit: usize },
    #[error("not a topological order: {0}")]
    NonTopologicalOrder(String),
    #[error(transparent)]
    Scheduling(#[from] SchedulingFailure),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
