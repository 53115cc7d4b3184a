//! Empirical checks on Ginelli runs and on the estimates behind them.
//!
//! - [`lyapunov_from_r`]: exponents from the logarithms of the stored
//!   triangular diagonals.
//! - [`covariance_residual`]: how far one step of the cocycle moves a computed
//!   block span away from the span computed one index later.
//! - [`fit_rate`]: least-squares exponential rate over the tail of a sequence.
//! - [`lemmas`]: randomized instances of the forward and backward one-step
//!   estimates, with both sides evaluated.
//! - [`convergence`]: the distance-versus-runtime experiment and its reports.

pub mod convergence;
pub mod lemmas;

use nalgebra::DVector;
use serde::Serialize;
use thiserror::Error;

use crate::cocycle::{refine_piecewise_constant, CocycleError, CocycleOrbit};
use crate::ginelli::{GinelliError, GinelliRun};
use crate::grassmann::{grassmann_distance, orthonormalize, GrassmannError, Subspace};
use crate::oracle::OracleError;

pub use convergence::{
    convergence_experiment, BlockReport, CellRecord, ConvergenceKind, ConvergenceReport, ExperimentConfig, Ray,
};
pub use lemmas::{
    check_backward_lemma, check_forward_lemma, check_forward_projection_corollary, lemma_sweep,
    BackwardInstance, ForwardInstance, LemmaCheckRecord, LemmaId, SweepSummary,
};

/// Distances at or below this are treated as rounding noise by [`fit_rate`].
pub const DISTANCE_FLOOR: f64 = 1e-13;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("run has no recorded transitions")]
    EmptyHistory,
    #[error("need at least 4 points above the distance floor, found {usable}")]
    InsufficientData { usable: usize },
    #[error("random instance does not meet the precondition")]
    PreconditionUnsatisfiable,
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Ginelli(#[from] GinelliError),
    #[error(transparent)]
    Cocycle(#[from] CocycleError),
    #[error(transparent)]
    Grassmann(#[from] GrassmannError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

impl DiagnosticsError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::EmptyHistory => "diagnostics::EmptyHistory",
            Self::InsufficientData { .. } => "diagnostics::InsufficientData",
            Self::PreconditionUnsatisfiable => "diagnostics::PreconditionUnsatisfiable",
            Self::BadConfig(_) => "diagnostics::BadConfig",
            Self::Ginelli(e) => e.name(),
            Self::Cocycle(e) => e.name(),
            Self::Grassmann(e) => e.name(),
            Self::Oracle(e) => e.name(),
        }
    }
}

/// `λ̂_i = Σ_t log R_t[i, i] / (total steps)` over all forward transitions.
///
/// The triangular factor of the initial vectors is not counted.
pub fn lyapunov_from_r(run: &GinelliRun) -> Result<Vec<f64>, DiagnosticsError> {
    let steps = run.total_steps();
    if run.r_history().is_empty() || steps == 0 {
        return Err(DiagnosticsError::EmptyHistory);
    }
    let k = run.k();
    let mut sums = vec![0.0; k];
    for r in run.r_history() {
        for (i, s) in sums.iter_mut().enumerate() {
            *s += r[(i, i)].ln();
        }
    }
    Ok(sums.into_iter().map(|s| s / steps as f64).collect())
}

/// `d_G(orth(L(σ^at ω) · span_at), span_next)`.
pub fn covariance_residual(
    orbit: &CocycleOrbit,
    at: i64,
    span_at: &Subspace,
    span_next: &Subspace,
) -> Result<f64, DiagnosticsError> {
    if span_at.dim() != span_next.dim() {
        return Err(DiagnosticsError::BadConfig(format!(
            "span dimensions differ: {} vs {}",
            span_at.dim(),
            span_next.dim()
        )));
    }
    let image = orbit.generator_at(at)? * span_at.basis();
    let (mapped, _) = orthonormalize(&image, crate::grassmann::DEFAULT_RANK_TOL)?;
    Ok(grassmann_distance(&mapped, span_next)?)
}

/// Least-squares slope of `log(distance)` against `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub rate: f64,
    pub points_used: usize,
    /// Points excluded because they were at or below [`DISTANCE_FLOOR`].
    pub dropped: usize,
}

/// Fits `distance ≈ C e^{rate · N}` over the latter half of the usable points.
///
/// Points with a distance at or below [`DISTANCE_FLOOR`] (or non-finite) are
/// dropped; at least four must remain.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit, DiagnosticsError> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(n, d)| n.is_finite() && d.is_finite() && d > DISTANCE_FLOOR)
        .collect();
    let dropped = points.len() - usable.len();
    if usable.len() < 4 {
        return Err(DiagnosticsError::InsufficientData { usable: usable.len() });
    }
    let tail = &usable[usable.len() - usable.len().div_ceil(2)..];
    let n = tail.len() as f64;
    let mean_x = tail.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = tail.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(x, d) in tail {
        let dx = x - mean_x;
        sxy += dx * (d.ln() - mean_y);
        sxx += dx * dx;
    }
    if sxx == 0.0 {
        return Err(DiagnosticsError::InsufficientData { usable: 1 });
    }
    Ok(RateFit {
        rate: sxy / sxx,
        points_used: tail.len(),
        dropped,
    })
}

/// `∫ |ρ − 1|` for a bin density `ρ` on the circle.
pub fn l1_distance_to_uniform(density: &DVector<f64>) -> f64 {
    density.iter().map(|x| (x - 1.0).abs()).sum::<f64>() / density.len() as f64
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Distance between the lines spanned by two bin vectors of possibly different
/// resolutions, after refining both to a common bin count.
pub fn truncation_distance(a: &DVector<f64>, b: &DVector<f64>) -> Result<f64, DiagnosticsError> {
    let common = a.len() / gcd(a.len(), b.len()) * b.len();
    let ra = refine_piecewise_constant(a, common / a.len());
    let rb = refine_piecewise_constant(b, common / b.len());
    let sa = Subspace::span(&nalgebra::DMatrix::from_column_slice(common, 1, ra.as_slice()))?;
    let sb = Subspace::span(&nalgebra::DMatrix::from_column_slice(common, 1, rb.as_slice()))?;
    Ok(grassmann_distance(&sa, &sb)?)
}
