use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A density evaluated to zero (or NaN) at an observation, so a
    /// log-likelihood ratio is not finite.
    #[error("model support: log-likelihood ratio for alternative {alternative} is not finite at {observation:?}")]
    ModelSupport {
        alternative: usize,
        observation: Vec<f64>,
    },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A statistic became NaN or infinite while running a procedure.
    #[error("non-finite {what} at step {step}")]
    NonFinite { what: &'static str, step: u64 },

    #[error("threshold grid exhausted: largest estimated ARL {largest_arl:.3} is below the target {target:.3}")]
    GridExhausted { largest_arl: f64, target: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
