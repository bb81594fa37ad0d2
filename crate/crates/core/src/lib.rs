//! Solver toolkit for positive Maxwell problems discretized with lowest-order
//! edge elements on hexahedral beam meshes.
//!
//! The systems of interest stem from the curl-curl operator plus a scaled mass
//! term, `A = K + gamma * M`. They are symmetric positive definite but nearly
//! singular for small `gamma` because the curl-curl matrix `K` has a very large
//! kernel: the discrete gradients of all nodal functions, enlarged further when
//! the domain has holes. This crate builds such systems on axis-aligned beam
//! geometries (optionally with longitudinal and transverse holes and
//! heterogeneous coefficients) and solves them with overlapping additive
//! Schwarz preconditioners:
//!
//! * one-level additive Schwarz (`AS`),
//! * two-level deflated variants whose coarse space holds the near-kernel,
//!   either globally (`AS-NK`) or split per subdomain through the partition of
//!   unity (`AS-SNK`),
//! * adaptive enrichments of either coarse space by eigenvectors of local
//!   generalized eigenproblems (`AS-NK-GenEO`, `AS-SNK-GenEO`).
//!
//! The enriched two-level operator has a provable spectral condition number
//! bound `(1 + k1 * tau) * k0` in terms of two decomposition constants and the
//! eigenvalue threshold `tau`; [`solver::estimate_extremes`] measures the
//! spectrum so the bound can be checked numerically on desk-scale problems.
//!
//! Start from the runnable programs in `examples/` (one per capability), or
//! from [`bench::run_scenario`] which drives the whole pipeline from a TOML
//! scenario description.

pub mod assembly;
pub mod bench;
pub mod coarse;
pub mod decomposition;
pub mod linalg;
pub mod mesh;
pub mod solver;
pub mod sparse;

pub use assembly::{CoefficientField, CoefficientPattern, DiscreteGradient, DofMap, System};
pub use coarse::{CoarseKind, CoarseSizes, CoarseSpace, GeneoSpectrum, LocalProblem};
pub use decomposition::{OverlappingDecomposition, Ownership, PartitionOfUnity};
pub use mesh::{BcSpec, BeamGeometry, BoundaryTags, CellBox, HoleSpec, Mesh};
pub use solver::{GmresOptions, Method, Preconditioner, SolveReport, SpectralEstimate};
pub use sparse::{ColMatrix, CsrMatrix};

/// Errors produced anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid decomposition: {0}")]
    Decomposition(String),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("eigensolver failed in subdomain {subdomain}: {detail}")]
    Eigensolver { subdomain: usize, detail: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("spectral bound violated: {0}")]
    BoundViolation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
