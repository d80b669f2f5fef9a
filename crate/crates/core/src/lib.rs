//! Fourier approximation of high-dimensional 1-periodic functions through
//! truncated ANOVA decompositions.
//!
//! The crate is organised bottom up:
//!
//! * [`index_sets`]: term subsets, downward-closed term families and the
//!   grouped frequency sets `I(U)` built from low-dimensional blocks.
//! * [`anova`]: coefficient maps, truncation, variances and global
//!   sensitivity indices, plus quadrature oracles for the projections.
//! * [`weights`]: POD smoothness weights and closed-form truncation bounds.
//! * [`lattice`]: rank-1 lattices, component-by-component construction and
//!   FFT based evaluation / reconstruction.
//! * [`operator`]: the block structured nonequispaced Fourier operator and
//!   least-squares solvers (LSQR and the lattice adjoint shortcut).
//! * [`method`]: active set detection and the refined approximation.
//! * [`bench`]: the 9-dimensional B-spline benchmark and the experiment runner.

pub mod anova;
pub mod bench;
pub mod error;
pub mod index_sets;
pub mod lattice;
pub mod method;
pub mod operator;
pub mod weights;

pub use num_complex::Complex64;

pub use anova::{CoefficientMap, SensitivityReport, TermSensitivity};
pub use error::{Error, Result};
pub use index_sets::{Frequency, GroupedIndexSet, LowDimIndexSet, TermFamily, TermSubset};
pub use lattice::Rank1Lattice;
pub use method::{ActiveSetResult, ApproxModel, DetectionConfig, SearchSet};
pub use operator::{NodeSet, SolveReport};
pub use weights::WeightParams;
