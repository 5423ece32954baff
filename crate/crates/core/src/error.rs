use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration; `field` is a dotted path such as `obstacles[1].radius`.
    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("no grid control satisfies every scenario constraint ({constraints} pairs)")]
    DesiredDistributionInfeasible { constraints: usize },

    #[error("no grid control satisfies the {method} feasibility test")]
    NoFeasibleControl { method: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn shape(message: impl Into<String>) -> Self {
        Error::Shape(message.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
