use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("s = {requested} exceeds the configured cap s <= {cap}")]
    Capacity { requested: u32, cap: u32 },

    #[error("not a GEC: erasure mass differs across inputs ({0:.3e} > 1e-12)")]
    NotAGec(f64),

    #[error("unsupported erasure regime: p = {0} > 1/2")]
    UnsupportedErasure(f64),

    #[error("degenerate channel: {0}")]
    Degenerate(String),

    #[error("no extractable key at this (n, delta): l = {0}")]
    NoExtractableKey(i64),

    #[error("exact audit unavailable: {0}")]
    ExactAuditUnavailable(String),
}

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
