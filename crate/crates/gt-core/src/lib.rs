//! Core library for a four-band non-Hermitian double-chain lattice with
//! glide-time (GT) symmetry.
//!
//! The model is a pair of coupled SSH chains with reciprocal intra/inter-cell
//! hoppings `t1`, `t2` and non-reciprocal rung couplings `t3`, `t4`.  The
//! crate provides Hamiltonian builders, biorthogonal spectral analysis,
//! generalized-Brillouin-zone (GBZ) construction, time evolution, eigenmode /
//! momentum-space decompositions, and phase-diagram classification.

pub mod decompose;
pub mod dynamics;
pub mod gbz;
pub mod model;
pub mod numeric;
pub mod phases;
pub mod spectral;

use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum GtError {
    /// A caller-supplied argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A numerical procedure failed to converge or produced an unusable
    /// intermediate (e.g. a flagged GBZ curve handed to the contour
    /// integrator).
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    /// A classifier could not produce an unambiguous label.
    #[error("classification ambiguous: {0}")]
    ClassificationAmbiguous(String),
    /// LAPACK / linear-algebra backend error.
    #[error("linear algebra error: {0}")]
    Linalg(String),
}

impl From<ndarray_linalg::error::LinalgError> for GtError {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        GtError::Linalg(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, GtError>;

/// Crate version string recorded in CLI manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
