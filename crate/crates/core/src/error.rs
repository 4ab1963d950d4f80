use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported QAM order {0}: expected 4, 16 or 64")]
    UnsupportedOrder(usize),

    #[error("bit sequence length {len} is not a multiple of {bits_per_symbol}")]
    BitLength { len: usize, bits_per_symbol: usize },

    #[error("symbol index {index} out of range for M = {order}")]
    SymbolOutOfRange { index: usize, order: usize },

    #[error("non-finite value at sample {index} in {stage}")]
    NonFinite { stage: &'static str, index: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("CFO {cfo_hz} Hz exceeds the oscillator bound of {bound_hz} Hz")]
    CfoOutOfBound { cfo_hz: f64, bound_hz: f64 },

    #[error("channel vector is all zeros")]
    ZeroChannel,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("training diverged at epoch {epoch}, batch {batch}: {what}")]
    Diverged {
        epoch: usize,
        batch: usize,
        what: String,
    },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("config line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },

    #[error("{0}")]
    Missing(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
