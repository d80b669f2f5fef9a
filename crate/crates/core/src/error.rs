use thiserror::Error;

use crate::index_sets::TermSubset;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coordinate {coord} is outside 1..={d}")]
    CoordinateOutOfRange { coord: usize, d: usize },

    #[error("term coordinates must be strictly increasing and start at 1, got {0:?}")]
    InvalidTerm(Vec<usize>),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("frequency {0:?} has a zero entry inside its term")]
    ZeroEntry(Vec<i64>),

    #[error("bandwidth must be even and at least 2, got {0}")]
    OddBandwidth(u64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index set enumeration exceeded the per-axis bound {cap} on term {term}")]
    EnumerationCap { term: TermSubset, cap: i64 },

    #[error("term family is not downward closed: {missing} is missing (subset of {parent})")]
    NotDownwardClosed { missing: TermSubset, parent: TermSubset },

    #[error("no frequency block for term {0}")]
    MissingBlock(TermSubset),

    #[error("term {0} is not part of the coefficient family")]
    NotSubfamily(TermSubset),

    #[error("the index set does not contain the zero frequency")]
    MissingZeroFrequency,

    #[error("length mismatch: expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("lattice (M = {m}) is not reconstructing for the index set")]
    NotReconstructing { m: u64 },

    #[error("no reconstructing rank-1 lattice found up to M = {limit}")]
    LatticeSearchExhausted { limit: u64 },

    #[error("lattice of size {m} exceeds the sampling limit {max}")]
    LatticeTooLarge { m: u64, max: u64 },

    #[error("dual lattice window of radius {radius} is too small: boundary mass {mass:e}")]
    WindowTooSmall { radius: i64, mass: f64 },

    #[error("grid resolution {grid} cannot resolve bandwidth {bandwidth}")]
    Aliasing { grid: usize, bandwidth: i64 },

    #[error("the family has no excluded terms")]
    NoExcludedTerms,

    #[error("total variance is zero; sensitivity indices are undefined")]
    ZeroVariance,

    #[error("{0}")]
    Serialization(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
