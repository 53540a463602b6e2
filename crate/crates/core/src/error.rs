use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("size cap exceeded: {0}")]
    Size(String),
    #[error("unsupported derivative order: {0}")]
    UnsupportedOrder(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("point `{0}` is not tracked by the linearized state")]
    CacheMiss(String),
    #[error("activation audit failed for {activation}: order {order} at x = {x}: {reason}")]
    Audit {
        activation: String,
        order: usize,
        x: f64,
        reason: String,
    },
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
