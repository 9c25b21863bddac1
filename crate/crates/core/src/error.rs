use thiserror::Error;

/// Errors raised by the simulation core.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A tabulated quantity was queried outside its sampled range.
    #[error("extrapolation error: {query} outside tabulated range [{lo}, {hi}]")]
    Extrapolation { query: f64, lo: f64, hi: f64 },

    /// A right-hand side or stage produced a non-finite value.
    #[error("non-finite value encountered at tau = {tau}")]
    NonFinite { tau: f64 },

    /// A density-matrix invariant broke down during integration.
    #[error("integration unstable at tau = {tau}: {detail}")]
    IntegrationUnstable { tau: f64, detail: String },

    /// A checked property of the output does not hold.
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// A raster or grid is too coarse for the requested feature scale.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// Invalid configuration; names the offending field.
    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code: 2 for usage and configuration problems, 3 for
    /// numerical-invariant violations, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Config { .. } | Error::Extrapolation { .. } => 2,
            Error::Resolution(_) => 2,
            Error::NonFinite { .. } | Error::IntegrationUnstable { .. } | Error::Invariant(_) => 3,
            Error::Io(_) | Error::Csv(_) | Error::Serde(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
