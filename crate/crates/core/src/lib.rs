//! Spectral weights of positive operators with discrete spectrum, computed
//! from eigenvalue/multiplicity data alone.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dixmier;
pub mod error;
pub mod generators;
pub mod hypertrace;
pub mod numeric;
pub mod report;
pub mod special;
pub mod spectrum;
pub mod tauberian;
pub mod zeta;

pub use dixmier::{DixmierEstimate, Schedule, Verdict};
pub use error::{Error, Result};
pub use generators::{generate, GeneratorSpec};
pub use hypertrace::{HypertraceVerdict, TruncatedOperator};
pub use report::{AnalysisConfig, AnalysisReport};
pub use spectrum::{DistinctSpectrum, GrowthClass, GrowthDiagnostics, SpectralPoint, Window};
pub use tauberian::TauberReport;
pub use zeta::ZetaValue;

pub use num_complex::Complex64;
