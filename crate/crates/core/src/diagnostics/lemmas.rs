//! Randomized checks of the one-step subspace estimates.
//!
//! Forward estimate. Let `X = Y ⊕ V = Y' ⊕ V'`, `L Y ⊆ Y'`, `L V ⊆ V'`,
//! `ker L ⊆ V`, and let `W` be a complement of `V` with
//! `inf_{w ∈ W∩S} d(w, V) ≥ 2 ‖Π_{V||Y}‖ · ‖L|_V‖ / inf_{y ∈ Y∩S} ‖L y‖`. Then
//!
//! ```text
//! sup_{w' ∈ LW∩B} d(w', Y'∩B) ≤ 4 ‖Π_{V||Y}‖ / inf_{w∈W∩S} d(w, V) · ‖L|_V‖ / inf_{y∈Y∩S} ‖L y‖
//! ‖Π_{V'||Y'}|_{LW}‖           ≤ 2 ‖Π_{V||Y}‖ / inf_{w∈W∩S} d(w, V) · ‖L|_V‖ / inf_{y∈Y∩S} ‖L y‖
//! ```
//!
//! Backward estimate. Let `X = Y₁ ⊕ V₁`, `V₁ = Y₂ ⊕ V₂`, `ker L ⊆ V₂`, let
//! `W₁ ⊆ W₂` be complements of `V₁` and `V₂`, and let `W̃ ⊆ W₂` be a
//! complement of `W₁` in `W₂` with `inf_{w̃' ∈ LW̃∩S} d(w̃', LW₁) ≥ δ > 0`. Then
//!
//! ```text
//! sup_{w̃ ∈ W̃∩B} d(w̃, Y₂∩B) ≤ 2 (2/δ ‖Π_{V₁||W₁}‖ + ‖Π_{V₁||Y₁}‖ ‖Π_{W₁||V₁}‖) ‖L|_{V₁}‖ / inf_{y∈Y₁∩S} ‖L y‖
//!                            + 2 ‖Π_{V₂||Y₁⊕Y₂}|_{W₂}‖
//! ```
//!
//! Operator norms and infima over spheres are computed exactly from singular
//! values. The Hausdorff-type suprema on the left are estimated from below by
//! sampling unit vectors, and also computed exactly as directed gaps; a record
//! is `satisfied` only if both values respect the bound.

use std::fmt;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::DiagnosticsError;
use crate::grassmann::{
    directed_gap, orthonormalize, projection_norm, transversality_degree, GrassmannError, SplittingPair, Subspace,
    DEFAULT_RANK_TOL,
};
use crate::linalg::{smallest_singular_value, spectral_norm, solve_upper_triangular};
use crate::rng::{derive_seed, gaussian_matrix, stream_rng};

/// Unit vectors sampled per Monte-Carlo supremum.
pub const DEFAULT_SAMPLES: usize = 10_000;

/// Attempts per sweep slot before an instance is recorded as not meeting its precondition.
pub const RESAMPLE_BUDGET: usize = 10;

const ABS_TOL: f64 = 1e-12;
const REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LemmaId {
    /// Distance of `LW` to `Y'`.
    Forward,
    /// Norm of `Π_{V'||Y'}` on `LW`.
    ForwardProjection,
    /// Distance of `W̃` to `Y₂` under the transversality hypothesis `δ`.
    Backward,
}

impl LemmaId {
    pub const ALL: [LemmaId; 3] = [LemmaId::Forward, LemmaId::ForwardProjection, LemmaId::Backward];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Forward => "forward",
            Self::ForwardProjection => "forward-projection",
            Self::Backward => "backward",
        }
    }
}

impl fmt::Display for LemmaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for LemmaId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown lemma {s:?} (expected forward, forward-projection or backward)"))
    }
}

/// Both sides of one inequality instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaCheckRecord {
    pub lemma: LemmaId,
    pub instance: String,
    pub seed: u64,
    /// Left-hand side as reported: a Monte-Carlo lower bound for suprema, exact otherwise.
    pub lhs: f64,
    /// Left-hand side computed exactly from singular values.
    pub lhs_exact: f64,
    pub rhs: f64,
    pub satisfied: bool,
    pub precondition_met: bool,
    /// Unit vectors sampled for `lhs` (0 when `lhs` is exact).
    pub samples: usize,
    /// Measured transversality `δ` (backward estimate only).
    pub delta: Option<f64>,
}

impl LemmaCheckRecord {
    /// A violation is an unsatisfied record whose precondition holds.
    pub fn is_violation(&self) -> bool {
        self.precondition_met && !self.satisfied
    }
}

fn within(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + ABS_TOL + REL_TOL * rhs.abs()
}

/// Largest `‖x − P_target x‖` over sampled unit vectors `x` of `from`; the
/// nearest point of `target ∩ B` to a unit vector is its orthogonal projection.
fn sampled_gap(from: &Subspace, target: &Subspace, samples: usize, rng: &mut ChaCha8Rng) -> f64 {
    let k = from.dim();
    let mut best: f64 = 0.0;
    let count = if k == 1 { 1 } else { samples };
    for _ in 0..count {
        let c = gaussian_matrix(rng, k, 1);
        let n = c.norm();
        if n == 0.0 {
            continue;
        }
        let x = from.basis() * (c / n);
        let residual = &x - target.basis() * (target.basis().transpose() * &x);
        best = best.max(residual.norm());
    }
    best
}

/// Orthonormal basis of the range of `L·basis(S)`; `None` when the image is zero.
fn image(l: &DMatrix<f64>, s: &Subspace) -> Option<Subspace> {
    let m = l * s.basis();
    let svd = m.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let largest = svd.singular_values.max();
    if !(largest > 0.0) {
        return None;
    }
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > DEFAULT_RANK_TOL * largest)
        .collect();
    Subspace::from_orthonormal(u.select_columns(&keep)).ok()
}

/// `factor · numer / denom · ratio`, with a vanishing `ratio` winning over a vanishing `denom`.
fn bound(factor: f64, denom: f64, ratio: f64) -> f64 {
    if ratio == 0.0 {
        0.0
    } else if denom == 0.0 || !ratio.is_finite() {
        f64::INFINITY
    } else {
        factor / denom * ratio
    }
}

fn block_diagonal(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(n, n);
    let mut at = 0;
    for b in blocks {
        out.view_mut((at, at), (b.nrows(), b.ncols())).copy_from(b);
        at += b.nrows();
    }
    out
}

fn hcat(parts: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows = parts[0].nrows();
    let cols: usize = parts.iter().map(|p| p.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for p in parts {
        out.columns_mut(at, p.ncols()).copy_from(p);
        at += p.ncols();
    }
    out
}

/// Map sending `sources[i]` into `targets[i]` through `blocks[i]` (in basis coordinates).
fn splitting_map(
    sources: &[&Subspace],
    targets: &[&Subspace],
    blocks: &[&DMatrix<f64>],
) -> Result<DMatrix<f64>, DiagnosticsError> {
    let src = hcat(&sources.iter().map(|s| s.basis()).collect::<Vec<_>>());
    let dst = hcat(&targets.iter().map(|s| s.basis()).collect::<Vec<_>>());
    let inv = src
        .try_inverse()
        .ok_or(DiagnosticsError::Grassmann(GrassmannError::IllConditionedSplitting { condition: f64::INFINITY }))?;
    Ok(dst * block_diagonal(blocks) * inv)
}

fn random_subspace(rng: &mut ChaCha8Rng, d: usize, k: usize) -> Result<Subspace, DiagnosticsError> {
    Ok(Subspace::span(&gaussian_matrix(rng, d, k))?)
}

/// `span(Y + V G)`, a complement of `V` given as the graph of `G : Y → V`.
fn graph(y: &Subspace, v: &Subspace, g: &DMatrix<f64>) -> Result<Subspace, DiagnosticsError> {
    Ok(Subspace::span(&(y.basis() + v.basis() * g))?)
}

/// `(Y, V), (Y', V')`, a map respecting both splittings, and a complement `W` of `V`.
#[derive(Debug, Clone)]
pub struct ForwardInstance {
    pub y: Subspace,
    pub v: Subspace,
    pub y_next: Subspace,
    pub v_next: Subspace,
    pub l: DMatrix<f64>,
    pub w: Subspace,
    pub description: String,
}

impl ForwardInstance {
    /// Random instance in `R^d` with `dim Y = k`, `1 ≤ k < d`.
    ///
    /// The growth ratio between `Y` and `V`, the tilt of `W` away from `Y` and
    /// the kernel of `L|_V` (none, one direction, or all of `V`) are drawn at
    /// random so that the precondition holds for a sizeable fraction of seeds.
    pub fn random(seed: u64, d: usize, k: usize) -> Result<Self, DiagnosticsError> {
        if k == 0 || k >= d {
            return Err(DiagnosticsError::BadConfig(format!("need 1 <= k < d, got k={k}, d={d}")));
        }
        let mut rng = stream_rng(seed, 0);
        let y = random_subspace(&mut rng, d, k)?;
        let v = random_subspace(&mut rng, d, d - k)?;
        let y_next = random_subspace(&mut rng, d, k)?;
        let v_next = random_subspace(&mut rng, d, d - k)?;
        let growth = rng.random_range(0.0..6.0f64).exp();
        let a = gaussian_matrix(&mut rng, k, k) * growth;
        let mut b = gaussian_matrix(&mut rng, d - k, d - k);
        let kernel = rng.random::<f64>();
        let kernel_note = if kernel < 0.1 {
            b.fill(0.0);
            "L|V=0"
        } else if kernel < 0.3 {
            b.column_mut(0).fill(0.0);
            "ker L|V nontrivial"
        } else {
            "L|V injective"
        };
        let l = splitting_map(&[&y, &v], &[&y_next, &v_next], &[&a, &b])?;
        let tilt = 10f64.powf(rng.random_range(-3.0..0.5));
        let w = graph(&y, &v, &(gaussian_matrix(&mut rng, d - k, k) * tilt))?;
        Ok(Self {
            y,
            v,
            y_next,
            v_next,
            l,
            w,
            description: format!("d={d} k={k} growth={growth:.3e} tilt={tilt:.3e} {kernel_note}"),
        })
    }

    fn quantities(&self) -> Result<ForwardQuantities, DiagnosticsError> {
        let pair = SplittingPair::new(self.y.clone(), self.v.clone())?;
        let proj_v_y = projection_norm(&pair, false);
        let trans = transversality_degree(&self.w, &self.v)?;
        let l_on_v = spectral_norm(&(&self.l * self.v.basis()));
        let inf_y = smallest_singular_value(&(&self.l * self.y.basis()));
        let ratio = if l_on_v == 0.0 { 0.0 } else if inf_y == 0.0 { f64::INFINITY } else { l_on_v / inf_y };
        let lw = image(&self.l, &self.w);
        let injective = lw.as_ref().is_some_and(|s| s.dim() == self.w.dim());
        let precondition_met =
            inf_y > 0.0 && trans > 0.0 && ratio.is_finite() && injective && trans >= 2.0 * proj_v_y * ratio;
        Ok(ForwardQuantities {
            proj_v_y,
            trans,
            ratio,
            lw,
            precondition_met,
        })
    }

    /// Evaluates the distance estimate for `LW`.
    pub fn evaluate_distance(&self, samples: usize, seed: u64) -> Result<LemmaCheckRecord, DiagnosticsError> {
        let q = self.quantities()?;
        let rhs = bound(4.0 * q.proj_v_y, q.trans, q.ratio);
        // a zero image is at distance zero from everything
        let (lhs, lhs_exact) = match &q.lw {
            Some(lw) => {
                let mut rng = stream_rng(seed, 1);
                (sampled_gap(lw, &self.y_next, samples, &mut rng), directed_gap(lw, &self.y_next)?)
            }
            None => (0.0, 0.0),
        };
        Ok(self.record(LemmaId::Forward, seed, lhs, lhs_exact, rhs, q.precondition_met, samples))
    }

    /// Evaluates the projection estimate `‖Π_{V'||Y'}|_{LW}‖`.
    pub fn evaluate_projection(&self, seed: u64) -> Result<LemmaCheckRecord, DiagnosticsError> {
        let q = self.quantities()?;
        let rhs = bound(2.0 * q.proj_v_y, q.trans, q.ratio);
        let lhs = match &q.lw {
            Some(lw) => SplittingPair::new(self.y_next.clone(), self.v_next.clone())?.restricted_norm(false, lw)?,
            None => 0.0,
        };
        Ok(self.record(LemmaId::ForwardProjection, seed, lhs, lhs, rhs, q.precondition_met, 0))
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &self,
        lemma: LemmaId,
        seed: u64,
        lhs: f64,
        lhs_exact: f64,
        rhs: f64,
        precondition_met: bool,
        samples: usize,
    ) -> LemmaCheckRecord {
        LemmaCheckRecord {
            lemma,
            instance: self.description.clone(),
            seed,
            lhs,
            lhs_exact,
            rhs,
            satisfied: within(lhs, rhs) && within(lhs_exact, rhs),
            precondition_met,
            samples,
            delta: None,
        }
    }
}

struct ForwardQuantities {
    proj_v_y: f64,
    trans: f64,
    ratio: f64,
    lw: Option<Subspace>,
    precondition_met: bool,
}

/// Nested splittings `X = Y₁ ⊕ Y₂ ⊕ V₂`, complements `W₁ ⊆ W₂`, a map with
/// `ker L ⊆ V₂` and a complement `W̃` of `W₁` in `W₂`.
#[derive(Debug, Clone)]
pub struct BackwardInstance {
    pub y1: Subspace,
    pub y2: Subspace,
    /// `None` when `Y₁ ⊕ Y₂` is the whole space.
    pub v2: Option<Subspace>,
    pub l: DMatrix<f64>,
    pub w1: Subspace,
    pub w2: Subspace,
    pub w_tilde: Subspace,
    pub description: String,
}

impl BackwardInstance {
    /// Random instance with `dim Y₁ = k1`, `dim Y₂ = k2`, `k1 + k2 ≤ d`.
    ///
    /// `W̃` is produced the way the backward pass produces it: a subspace of
    /// `L W₂` is chosen through upper-triangular-like coefficients in an
    /// orthonormal basis of `L W₂` and pulled back through `L|_{W₂}`.
    pub fn random(seed: u64, d: usize, k1: usize, k2: usize) -> Result<Self, DiagnosticsError> {
        if k1 == 0 || k2 == 0 || k1 + k2 > d {
            return Err(DiagnosticsError::BadConfig(format!(
                "need k1, k2 >= 1 and k1 + k2 <= d, got k1={k1}, k2={k2}, d={d}"
            )));
        }
        let k3 = d - k1 - k2;
        let mut rng = stream_rng(seed, 0);
        let y1 = random_subspace(&mut rng, d, k1)?;
        let y2 = random_subspace(&mut rng, d, k2)?;
        let v2 = if k3 > 0 { Some(random_subspace(&mut rng, d, k3)?) } else { None };
        let t1 = random_subspace(&mut rng, d, k1)?;
        let t2 = random_subspace(&mut rng, d, k2)?;
        let t3 = if k3 > 0 { Some(random_subspace(&mut rng, d, k3)?) } else { None };

        let g1 = rng.random_range(0.5..5.0f64);
        let g2 = rng.random_range(0.0..5.0f64);
        let a1 = gaussian_matrix(&mut rng, k1, k1) * g1.exp();
        let a2 = gaussian_matrix(&mut rng, k2, k2);
        let mut a3 = gaussian_matrix(&mut rng, k3, k3) * (-g2).exp();
        let kernel = rng.random::<f64>();
        if k3 > 0 && kernel < 0.1 {
            a3.fill(0.0);
        } else if k3 > 0 && kernel < 0.3 {
            a3.column_mut(0).fill(0.0);
        }
        let l = match (&v2, &t3) {
            (Some(v2), Some(t3)) => splitting_map(&[&y1, &y2, v2], &[&t1, &t2, t3], &[&a1, &a2, &a3])?,
            _ => splitting_map(&[&y1, &y2], &[&t1, &t2], &[&a1, &a2])?,
        };

        let v1 = match &v2 {
            Some(v2) => y2.join(v2)?,
            None => y2.clone(),
        };
        let tilt1 = 10f64.powf(rng.random_range(-3.0..0.0));
        let w1 = graph(&y1, &v1, &(gaussian_matrix(&mut rng, d - k1, k1) * tilt1))?;
        let tilt2 = 10f64.powf(rng.random_range(-3.0..0.0));
        let mut extra = y2.basis() + y1.basis() * gaussian_matrix(&mut rng, k1, k2);
        if let Some(v2) = &v2 {
            extra += v2.basis() * (gaussian_matrix(&mut rng, k3, k2) * tilt2);
        }
        let w2 = Subspace::span(&hcat(&[w1.basis(), &extra]))?;

        // LW₂ = Q R; choose LW̃ = Q C with C mostly along the trailing coordinates
        let (_, r) = orthonormalize(&(&l * w2.basis()), DEFAULT_RANK_TOL)?;
        let lead = 10f64.powf(rng.random_range(-4.0..1.0));
        let mut c = DMatrix::zeros(k1 + k2, k2);
        c.view_mut((0, 0), (k1, k2)).copy_from(&(gaussian_matrix(&mut rng, k1, k2) * lead));
        c.view_mut((k1, 0), (k2, k2))
            .copy_from(&(DMatrix::identity(k2, k2) + gaussian_matrix(&mut rng, k2, k2) * 0.3));
        let coeffs = solve_upper_triangular(&r, &c)
            .ok_or(DiagnosticsError::Grassmann(GrassmannError::RankDeficient { column_index: 0 }))?;
        let w_tilde = Subspace::span(&(w2.basis() * coeffs))?;

        Ok(Self {
            y1,
            y2,
            v2,
            l,
            w1,
            w2,
            w_tilde,
            description: format!(
                "d={d} k1={k1} k2={k2} gap1={g1:.3} gap2={g2:.3} tilt1={tilt1:.2e} tilt2={tilt2:.2e} lead={lead:.2e}"
            ),
        })
    }

    pub fn evaluate(&self, samples: usize, seed: u64) -> Result<LemmaCheckRecord, DiagnosticsError> {
        let v1 = match &self.v2 {
            Some(v2) => self.y2.join(v2)?,
            None => self.y2.clone(),
        };
        let w1_v1 = SplittingPair::new(self.w1.clone(), v1.clone())?;
        let y1_v1 = SplittingPair::new(self.y1.clone(), v1.clone())?;
        let proj_v1_w1 = projection_norm(&w1_v1, false);
        let proj_w1_v1 = projection_norm(&w1_v1, true);
        let proj_v1_y1 = projection_norm(&y1_v1, false);
        let l_on_v1 = spectral_norm(&(&self.l * v1.basis()));
        let inf_y1 = smallest_singular_value(&(&self.l * self.y1.basis()));
        let tail = match &self.v2 {
            Some(v2) => {
                let fast = self.y1.join(&self.y2)?;
                SplittingPair::new(fast, v2.clone())?.restricted_norm(false, &self.w2)?
            }
            None => 0.0,
        };
        let lw1 = image(&self.l, &self.w1).filter(|s| s.dim() == self.w1.dim());
        let lw_tilde = image(&self.l, &self.w_tilde).filter(|s| s.dim() == self.w_tilde.dim());
        let delta = match (&lw_tilde, &lw1) {
            (Some(a), Some(b)) => transversality_degree(a, b)?,
            _ => 0.0,
        };
        let complement = transversality_degree(&self.w_tilde, &self.w1)? > 0.0
            && self.w_tilde.dim() + self.w1.dim() == self.w2.dim()
            && directed_gap(&self.w_tilde, &self.w2)? < 1e-10;
        let precondition_met = delta > 1e-12 && inf_y1 > 0.0 && complement;
        let ratio = if l_on_v1 == 0.0 { 0.0 } else if inf_y1 == 0.0 { f64::INFINITY } else { l_on_v1 / inf_y1 };
        let rhs = bound(4.0 * proj_v1_w1, delta, ratio) + 2.0 * proj_v1_y1 * proj_w1_v1 * ratio + 2.0 * tail;
        let mut rng = stream_rng(seed, 1);
        let lhs = sampled_gap(&self.w_tilde, &self.y2, samples, &mut rng);
        let lhs_exact = directed_gap(&self.w_tilde, &self.y2)?;
        Ok(LemmaCheckRecord {
            lemma: LemmaId::Backward,
            instance: self.description.clone(),
            seed,
            lhs,
            lhs_exact,
            rhs,
            satisfied: within(lhs, rhs) && within(lhs_exact, rhs),
            precondition_met,
            samples: if self.w_tilde.dim() == 1 { 1 } else { samples },
            delta: Some(delta),
        })
    }
}

fn forward_dims(seed: u64) -> (usize, usize) {
    let mut rng = stream_rng(seed, 7);
    let d = rng.random_range(2..=8usize);
    let k = rng.random_range(1..=3usize.min(d - 1));
    (d, k)
}

fn backward_dims(seed: u64) -> (usize, usize, usize) {
    let mut rng = stream_rng(seed, 7);
    let d = rng.random_range(2..=8usize);
    let k1 = rng.random_range(1..=3usize.min(d - 1));
    let k2 = rng.random_range(1..=3usize.min(d - k1));
    (d, k1, k2)
}

fn require_met(record: LemmaCheckRecord) -> Result<LemmaCheckRecord, DiagnosticsError> {
    if record.precondition_met {
        Ok(record)
    } else {
        Err(DiagnosticsError::PreconditionUnsatisfiable)
    }
}

/// Random forward instance (dimensions drawn from the seed unless given) with its distance check.
pub fn check_forward_lemma(seed: u64, dims: Option<(usize, usize)>) -> Result<LemmaCheckRecord, DiagnosticsError> {
    let (d, k) = dims.unwrap_or_else(|| forward_dims(seed));
    require_met(ForwardInstance::random(seed, d, k)?.evaluate_distance(DEFAULT_SAMPLES, seed)?)
}

/// Random forward instance with its projection-norm check.
pub fn check_forward_projection_corollary(
    seed: u64,
    dims: Option<(usize, usize)>,
) -> Result<LemmaCheckRecord, DiagnosticsError> {
    let (d, k) = dims.unwrap_or_else(|| forward_dims(seed));
    require_met(ForwardInstance::random(seed, d, k)?.evaluate_projection(seed)?)
}

/// Random nested instance with its backward check.
pub fn check_backward_lemma(
    seed: u64,
    dims: Option<(usize, usize, usize)>,
) -> Result<LemmaCheckRecord, DiagnosticsError> {
    let (d, k1, k2) = dims.unwrap_or_else(|| backward_dims(seed));
    require_met(BackwardInstance::random(seed, d, k1, k2)?.evaluate(DEFAULT_SAMPLES, seed)?)
}

fn evaluate_slot(lemma: LemmaId, seed: u64, samples: usize) -> Result<LemmaCheckRecord, DiagnosticsError> {
    match lemma {
        LemmaId::Forward => {
            let (d, k) = forward_dims(seed);
            ForwardInstance::random(seed, d, k)?.evaluate_distance(samples, seed)
        }
        LemmaId::ForwardProjection => {
            let (d, k) = forward_dims(seed);
            ForwardInstance::random(seed, d, k)?.evaluate_projection(seed)
        }
        LemmaId::Backward => {
            let (d, k1, k2) = backward_dims(seed);
            BackwardInstance::random(seed, d, k1, k2)?.evaluate(samples, seed)
        }
    }
}

/// Outcome of a randomized sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub lemma: LemmaId,
    pub instances: usize,
    pub precondition_met: usize,
    pub violations: usize,
    /// Instances drawn in total, including rejected ones.
    pub attempts: usize,
    /// Largest `lhs_exact / rhs` among instances meeting the precondition with `rhs` above rounding level.
    pub tightest: f64,
    pub records: Vec<LemmaCheckRecord>,
}

/// `instances` randomized checks of `lemma`.
///
/// Each slot draws up to [`RESAMPLE_BUDGET`] instances and keeps the first one
/// meeting the precondition (or the last one drawn). Slots run in parallel;
/// the result does not depend on the thread count.
pub fn lemma_sweep(
    lemma: LemmaId,
    instances: usize,
    root_seed: u64,
    samples: usize,
) -> Result<SweepSummary, DiagnosticsError> {
    if instances == 0 {
        return Err(DiagnosticsError::BadConfig("instances must be positive".into()));
    }
    let slots: Vec<(LemmaCheckRecord, usize)> = (0..instances)
        .into_par_iter()
        .map(|slot| {
            let mut last = None;
            for attempt in 0..RESAMPLE_BUDGET {
                let seed = derive_seed(root_seed, &format!("{lemma}/{slot}/{attempt}"));
                let record = evaluate_slot(lemma, seed, samples)?;
                let met = record.precondition_met;
                last = Some((record, attempt + 1));
                if met {
                    break;
                }
            }
            Ok(last.expect("budget is positive"))
        })
        .collect::<Result<_, DiagnosticsError>>()?;
    let attempts = slots.iter().map(|s| s.1).sum();
    let records: Vec<LemmaCheckRecord> = slots.into_iter().map(|s| s.0).collect();
    let tightest = records
        .iter()
        .filter(|r| r.precondition_met && r.rhs > 1e-8)
        .map(|r| r.lhs_exact / r.rhs)
        .fold(0.0, f64::max);
    Ok(SweepSummary {
        lemma,
        instances,
        precondition_met: records.iter().filter(|r| r.precondition_met).count(),
        violations: records.iter().filter(|r| r.is_violation()).count(),
        attempts,
        tightest,
        records,
    })
}
