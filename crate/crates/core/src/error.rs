use thiserror::Error;

/// Errors raised by effect synthesis and perception tables.
#[derive(Debug, Error)]
pub enum EffectError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("invalid table: {0}")]
    InvalidTable(String),
    #[error("table io: {0}")]
    Io(#[from] std::io::Error),
    #[error("table csv: {0}")]
    Csv(#[from] csv::Error),
}
