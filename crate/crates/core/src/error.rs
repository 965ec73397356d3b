use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter vector: {0}")]
    InvalidParam(String),

    #[error("invalid approximation: {0}")]
    InvalidApprox(String),

    #[error("covariance is not positive definite even after jitter")]
    SingularCovariance,

    #[error("quadrature grid needs {points} points, budget is {budget}")]
    PointBudget { points: usize, budget: usize },

    #[error("all particle weights vanished at t={t}")]
    TotalDegeneracy { t: usize },

    #[error("{algorithm} does not support {kind} parameters")]
    UnsupportedParamKind {
        algorithm: &'static str,
        kind: &'static str,
    },

    #[error("joint state space of {states} exceeds oracle budget {budget}")]
    OracleBudget { states: usize, budget: usize },

    #[error("model configuration: {0}")]
    Model(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the error is a numerical degeneracy (as opposed to bad input).
    pub fn is_degeneracy(&self) -> bool {
        matches!(self, Error::TotalDegeneracy { .. } | Error::SingularCovariance)
    }
}
