//! Exact sparse arithmetic on truncated three-variable Fourier expansions.

mod gauss;
mod interchange;
mod series;
mod subst;

pub use gauss::GaussInt;
pub use interchange::{from_interchange, to_interchange};
pub use series::{
    leading_ratio, proportional_on, series_equal, ExpTriple, FourierSeries3, LBound, Mismatch,
    TruncRegion, UNBOUNDED,
};
pub use subst::{substitute, VariableSubstitution};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FourierError {
    #[error("inadmissible substitution{}: {reason}", at.map(|e| format!(" at {e}")).unwrap_or_default())]
    InadmissibleSubstitution { at: Option<ExpTriple>, reason: String },
    #[error("region ({}, {}) exceeds available ({}, {})", requested.nmax4, requested.mmax4, available.nmax4, available.mmax4)]
    RegionTooLarge { requested: TruncRegion, available: TruncRegion },
    #[error("substitution does not cover the target: {reason}")]
    UncoveredTarget { reason: String },
    #[error("interchange format: {0}")]
    Interchange(String),
    #[error("not divisible: {0}")]
    NotDivisible(String),
}
