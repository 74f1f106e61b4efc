use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("precision error: {0}")]
    Precision(String),

    #[error("size error: {0}")]
    Size(String),

    #[error("unsupported cost model: {0}")]
    Unsupported(String),

    #[error("stage LP has no solution at {0}")]
    NoSolution(String),

    #[error("rollout reached ({state}, {cost}) at time {h}, outside the feasible set")]
    OffFeasibleSet { h: usize, state: String, cost: String },

    #[error("surrogate cost bound violated at time {h} for player {player}: {detail}")]
    Sandwich { h: usize, player: usize, detail: String },

    #[error("oracle cap exceeded: {0}")]
    CapExceeded(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("simplex exceeded {0} pivots")]
    PivotLimit(usize),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
