//! Covariant Lyapunov vectors of linear cocycles.
//!
//! The crate is organised bottom-up:
//!
//! - [`grassmann`]: subspaces of a finite truncation, the Hausdorff metric on
//!   unit-ball slices, directed gaps, degrees of transversality and oblique
//!   projections.
//! - [`cocycle`]: two-sided generator sequences along an orbit, plus the
//!   synthetic families (conjugated diagonal, Ulam transfer operators) and the
//!   `CLVMAT1` orbit exchange format.
//! - [`ginelli`]: the forward QR pass, the backward triangular pass in
//!   coefficient space and the final normalisation.
//! - [`oracle`]: closed-form Oseledets data for conjugated-diagonal cocycles
//!   and an SVD-based reference method for invertible cocycles.
//! - [`diagnostics`]: Lyapunov exponents from R-diagonals, covariance
//!   residuals, exponential rate fitting, randomized inequality checks and the
//!   convergence experiment with its JSON/CSV reports.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cocycle;
pub mod diagnostics;
pub mod ginelli;
pub mod grassmann;
pub(crate) mod linalg;
pub mod oracle;
pub mod rng;

pub use cocycle::{CocycleError, CocycleOrbit, ConjugatedDiagonalSpec, UlamTransferSpec};
pub use ginelli::{CLVResult, GinelliConfig, GinelliError, GinelliInputs, GinelliRun};
pub use grassmann::{GrassmannError, SplittingPair, Subspace};
pub use oracle::{OracleError, OracleSplitting};

/// Version string written into every report.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
