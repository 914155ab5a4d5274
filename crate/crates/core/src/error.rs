use thiserror::Error;

/// Errors raised by the simulator and receiver building blocks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("bit count {len} is not a multiple of {bits_per_symbol} bits per symbol")]
    BitLength { len: usize, bits_per_symbol: usize },

    #[error("info word has {got} bits, code expects {expected}")]
    InfoLength { got: usize, expected: usize },

    #[error("power ratio {0} leaves no pilot energy for estimation")]
    NoPilotEnergy(f64),

    #[error("{needed} layers need orthogonal cover codes but only {available} are configured")]
    NotEnoughCovers { needed: usize, available: usize },

    #[error("DMRS port {0} assigned to more than one layer")]
    PortCollision(usize),

    #[error("operation requires the {expected} pilot scheme")]
    WrongScheme { expected: &'static str },

    #[error("layer {0} has no DMRS resource elements to estimate from")]
    NoDmrs(usize),

    #[error("no channel estimate supplied for user {0}")]
    MissingEstimate(usize),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("receiver {receiver} cannot operate on the {scheme} scheme")]
    ReceiverScheme {
        receiver: &'static str,
        scheme: &'static str,
    },

    #[error("malformed {what}: {detail}")]
    Parse { what: &'static str, detail: String },

    #[error("dataset format error: {0}")]
    Dataset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
