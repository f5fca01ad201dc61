use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("unknown hash algorithm `{0}`")]
    UnknownAlgorithm(String),

    #[error("invalid partition plan: {0}")]
    InvalidPlan(String),

    #[error("no partition plan of {p} primes fits a {target}-bit target")]
    InfeasiblePlan { target: u64, p: usize },

    #[error("invalid scheme parameters: {0}")]
    InvalidParams(String),

    #[error("no preset for kappa={kappa} variant={variant}")]
    UnknownPreset { kappa: u32, variant: u8 },

    #[error("no counter yields distinct indices after {attempts} attempts")]
    CounterExhausted { attempts: u64 },

    #[error("time {now} is outside the validity window [{t0}, {t0}+{t_delta}]")]
    OutsideTimeWindow { now: u64, t0: u64, t_delta: u64 },

    #[error("one-time key has already signed a message")]
    KeyReused,

    #[error("parse error in field `{field}` at byte offset {offset}")]
    Parse { field: &'static str, offset: usize },

    #[error("unsupported format version {found}")]
    VersionMismatch { found: u8 },

    #[error("expected a {expected} file, found a {found} file")]
    WrongKind {
        expected: &'static str,
        found: &'static str,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
