use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid generator spec: {field}: {message}")]
    InvalidSpec { field: String, message: String },

    #[error("spectrum terminated after {available} blocks, {needed} required")]
    InsufficientBlocks { needed: u64, available: u64 },

    #[error("prime sieve limit {limit} exceeded")]
    SieveLimitExceeded { limit: u64 },

    #[error("{what} out of range: {detail}")]
    OutOfRange { what: &'static str, detail: String },

    #[error("grid too short: {got} points, at least {min} required")]
    GridTooShort { got: usize, min: usize },

    #[error("least-squares design matrix is near-singular")]
    IllConditionedFit,

    #[error("series diverges at s = {s} (Re(s) must exceed 1)")]
    Divergent { s: Complex64 },

    #[error("tolerance {tol:e} not reached within {blocks} blocks (tail bound {tail_bound:e})")]
    TolUnreachable { tol: f64, blocks: u64, tail_bound: f64 },

    #[error("extrapolation did not converge (last estimate {last_estimate}, {points} points)")]
    NoConvergence { last_estimate: f64, points: usize },

    #[error("pole at s = {s}")]
    PoleAt { s: Complex64 },

    #[error("partition function not finite at beta = {beta}")]
    NotNuclear { beta: f64 },

    #[error("block {k} has multiplicity > 1; matrix operations need a multiplicity-one prefix")]
    MultiplicityUnsupported { k: u64 },

    #[error("dimension mismatch: {detail}")]
    DimensionMismatch { detail: String },

    #[error("config error at {location}: {message}")]
    Config { location: String, message: String },

    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidSpec {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl Error {
    /// Stable snake_case name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidSpec { .. } => "invalid_spec",
            Error::InsufficientBlocks { .. } => "insufficient_blocks",
            Error::SieveLimitExceeded { .. } => "sieve_limit_exceeded",
            Error::OutOfRange { .. } => "out_of_range",
            Error::GridTooShort { .. } => "grid_too_short",
            Error::IllConditionedFit => "ill_conditioned_fit",
            Error::Divergent { .. } => "divergent",
            Error::TolUnreachable { .. } => "tol_unreachable",
            Error::NoConvergence { .. } => "no_convergence",
            Error::PoleAt { .. } => "pole_at",
            Error::NotNuclear { .. } => "not_nuclear",
            Error::MultiplicityUnsupported { .. } => "multiplicity_unsupported",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::Config { .. } => "config",
            Error::Io { .. } => "io",
        }
    }
}
