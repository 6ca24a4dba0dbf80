use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("graph construction failed: target {target}, closest achieved {closest}")]
    ConstructionFailure { target: f64, closest: f64 },

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("non-finite input: {0}")]
    NonFiniteInput(String),

    #[error("divergence detected at round {round}")]
    Divergence { round: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
