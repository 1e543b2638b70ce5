use thiserror::Error;

/// Errors surfaced by the estimation pipeline.
///
/// The CLI maps these onto exit codes: argument/state/precondition problems
/// exit 2, numeric failures exit 3, io failures exit 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    /// DEATH or MOVE proposed on an intercept-only model; the sampler must
    /// redistribute that proposal mass instead of asking for it.
    #[error("illegal move: {0}")]
    IllegalMove(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    /// More than the tolerated number of consecutive MLE failures inside a
    /// chain.
    #[error("chain stalled: {0}")]
    ChainStall(String),

    /// A conditioning slab for a point-wise credible band contains no
    /// observed covariate pairs.
    #[error("empty slab: no observations with {axis} in ({lo}, {hi})")]
    EmptySlab {
        axis: &'static str,
        lo: f64,
        hi: f64,
    },

    #[error("ingest error at line {line}: {msg}")]
    Ingest { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid_argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
