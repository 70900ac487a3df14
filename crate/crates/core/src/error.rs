use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error(
        "model is not observable over {window} steps (observability rank {rank} < order {order})"
    )]
    NotObservable {
        rank: usize,
        order: usize,
        window: usize,
    },

    #[error("weave junction constraints violated (worst junction residual {worst_residual:e})")]
    Weave { worst_residual: f64 },

    #[error("cannot recover outputs from lifted predictions: {0}")]
    UnsupportedRecovery(String),

    #[error("linear algebra failure: {0}")]
    Linalg(String),
}

pub type Result<T> = std::result::Result<T, Error>;
