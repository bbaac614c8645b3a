use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("potential is singular at {0:?}; use a positive regularization")]
    SingularPoint(Vec<f64>),

    #[error("{0} is only defined on grid samples for sampled potentials")]
    NotPointwise(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("energy stays above -{margin} on the whole amplitude bracket [{lo}, {hi}]")]
    BracketFailure { lo: f64, hi: f64, margin: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
