use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid panel: {0}")]
    InvalidPanel(String),

    #[error("non-monotone missingness for dyad {dyad}, member {member}: outcome observed at time {time} after a missing wave")]
    NonMonotone {
        dyad: String,
        member: u8,
        time: usize,
    },

    #[error("missing baseline outcome for dyad {dyad}, member {member}")]
    MissingBaseline { dyad: String, member: u8 },

    #[error("missing covariate '{column}' for dyad {dyad}, member {member}, time {time}")]
    MissingCovariate {
        dyad: String,
        member: u8,
        time: usize,
        column: String,
    },

    #[error("augmentation incomplete: no value for member {member}, dyad {dyad}, time {time}")]
    AugmentationIncomplete {
        member: u8,
        dyad: usize,
        time: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular design for member {member}: column '{column}' is collinear with {with:?}")]
    Singular {
        member: u8,
        column: String,
        with: Vec<String>,
    },

    #[error("non-finite value after block '{block}' at iteration {iteration}")]
    NonFinite { iteration: usize, block: String },

    #[error("chain diverged in block '{block}' at iteration {iteration} (|value| = {value:e}); the posterior may be improper")]
    Divergence {
        iteration: usize,
        block: String,
        value: f64,
    },

    #[error("no dyads completed follow-up")]
    NoCompleters,

    #[error("transition order q = {0} is not supported by the sampler (only q = 1)")]
    UnsupportedOrder(usize),

    #[error("improper prior: {0}")]
    ImproperPrior(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors raised while the chain was running (as opposed to bad input).
    pub fn is_sampler_failure(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. } | Error::Divergence { .. } | Error::Singular { .. }
        )
    }
}
