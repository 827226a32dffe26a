use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("variable {0} not assigned to any group")]
    UnassignedVariable(usize),

    #[error("degenerate column {0}: zero variance")]
    DegenerateColumn(usize),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("max iterations exceeded ({iterations}) with KKT residual {residual:e}")]
    MaxIterations {
        iterations: usize,
        residual: f64,
        last_iterate: Vec<f64>,
    },

    #[error("orthogonality precondition failed: max |X'X - I| = {max_deviation:e}")]
    NotOrthonormal { max_deviation: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("optimization failed to converge: {0}")]
    NonConvergence(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
