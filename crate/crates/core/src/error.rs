use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("infeasible scenario: {0}")]
    InfeasibleScenario(String),

    #[error("parse error at `{path}`: {message}")]
    Parse { path: String, message: String },

    #[error("invalid cost parameters: {0}")]
    CostParameters(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("heuristic failed: {0}")]
    Heuristic(String),

    #[error("solution does not match the routing graph: {0}")]
    SolutionMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
