//! Ground truth for validating Ginelli output.
//!
//! - [`OracleSplitting`] gives the exact Oseledets spaces of a
//!   conjugated-diagonal cocycle: `Y_j(σ^n ω) = T(n) · (coordinate block j)`.
//! - [`svd_reference_clvs`] is an independent method for invertible cocycles:
//!   the leading left singular spaces of the past product give the sums
//!   `Y_1 ⊕ … ⊕ Y_j`, the trailing right singular spaces of the future product
//!   give the filtration `V_j = Y_j ⊕ … ⊕ Y_p`, and each block is the
//!   intersection of the two.
//!
//! The singular vectors of the long products are accumulated with a one-sided
//! Jacobi iteration on log-scaled columns, so that singular values spanning
//! hundreds of orders of magnitude keep their relative accuracy.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::cocycle::{conjugator, CocycleError, CocycleOrbit, ConjugatedDiagonalSpec};
use crate::ginelli::CLVResult;
use crate::grassmann::{orthonormalize, GrassmannError, Subspace, DEFAULT_RANK_TOL};
use crate::linalg::condition_number;

/// Generators worse conditioned than this are treated as singular by the reference method.
pub const MAX_GENERATOR_CONDITION: f64 = 1e12;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("generator at index {index} is not invertible (condition number {condition:e})")]
    NotInvertible { index: i64, condition: f64 },
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error(transparent)]
    Cocycle(#[from] CocycleError),
    #[error(transparent)]
    Grassmann(#[from] GrassmannError),
}

impl OracleError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::NotInvertible { .. } => "oracle::NotInvertible",
            Self::BadRequest(_) => "oracle::BadRequest",
            Self::Cocycle(e) => e.name(),
            Self::Grassmann(e) => e.name(),
        }
    }
}

/// Exact Oseledets data of a conjugated-diagonal cocycle.
///
/// The tail `V(σ^n ω)` is `T(n)` applied to the coordinates with rate `-inf`
/// (empty when every rate is finite). It is equivariant and contains the
/// kernel of every generator.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSplitting {
    spec: ConjugatedDiagonalSpec,
    groups: Vec<(f64, Range<usize>)>,
}

impl OracleSplitting {
    pub fn new(spec: ConjugatedDiagonalSpec) -> Result<Self, CocycleError> {
        spec.validate()?;
        let groups = spec.groups();
        Ok(Self { spec, groups })
    }

    pub fn spec(&self) -> &ConjugatedDiagonalSpec {
        &self.spec
    }

    /// Distinct finite exponents `λ_1 > … > λ_p`.
    pub fn exponents(&self) -> Vec<f64> {
        self.groups.iter().map(|(r, _)| *r).collect()
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.groups.iter().map(|(_, r)| r.len()).collect()
    }

    /// `m_1 + … + m_p`.
    pub fn finite_dim(&self) -> usize {
        self.groups.last().map_or(0, |(_, r)| r.end)
    }

    fn image(&self, index: i64, coords: Range<usize>) -> Subspace {
        let t = conjugator(&self.spec, index);
        let cols = t.columns(coords.start, coords.len()).into_owned();
        // T(n) has condition number at most `conditioning`, so its columns are independent
        Subspace::span(&cols).expect("conjugator columns are linearly independent")
    }

    /// `[Y_1, …, Y_p]` at orbit index `index`.
    pub fn spaces_at(&self, index: i64) -> Vec<Subspace> {
        self.groups.iter().map(|(_, r)| self.image(index, r.clone())).collect()
    }

    pub fn tail_at(&self, index: i64) -> Option<Subspace> {
        let tail = self.spec.tail();
        (!tail.is_empty()).then(|| self.image(index, tail))
    }

    /// `[V_1, …, V_p]` with `V_j = Y_j ⊕ … ⊕ Y_p ⊕ V`.
    pub fn filtration_at(&self, index: i64) -> Vec<Subspace> {
        let d = self.spec.ambient_dim();
        self.groups.iter().map(|(_, r)| self.image(index, r.start..d)).collect()
    }

    /// `Y_1 ⊕ … ⊕ Y_j` for `j = 1..=p` (`j` is 1-based).
    pub fn sum_at(&self, index: i64, j: usize) -> Subspace {
        assert!(j >= 1 && j <= self.groups.len());
        self.image(index, 0..self.groups[j - 1].1.end)
    }
}

/// `Y_j(σ^n ω)` for every finite exponent of `spec`.
pub fn analytic_oseledets(spec: &ConjugatedDiagonalSpec, index: i64) -> Result<Vec<Subspace>, OracleError> {
    Ok(OracleSplitting::new(spec.clone())?.spaces_at(index))
}

/// Columns `e^{log_scale[p]} · dirs[:, p]` of a matrix whose left singular
/// vectors are being tracked.
struct ScaledColumns {
    dirs: DMatrix<f64>,
    log_scale: Vec<f64>,
}

impl ScaledColumns {
    fn identity(d: usize) -> Self {
        Self {
            dirs: DMatrix::identity(d, d),
            log_scale: vec![0.0; d],
        }
    }

    /// Replaces the tracked matrix `A = U Σ Vᵀ` by `L A`, dropping `V`.
    fn apply(&mut self, l: &DMatrix<f64>) {
        self.dirs = l * &self.dirs;
        for (p, mut col) in self.dirs.column_iter_mut().enumerate() {
            let n = col.norm();
            col /= n;
            self.log_scale[p] += n.ln();
        }
        self.orthogonalize();
        let top = self.log_scale.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.log_scale.iter_mut().for_each(|s| *s -= top);
    }

    /// One-sided Jacobi: rotates column pairs until all columns are orthogonal,
    /// then sorts them by decreasing scale.
    fn orthogonalize(&mut self) {
        let d = self.dirs.ncols();
        let tol = 4.0 * f64::EPSILON * d as f64;
        for _sweep in 0..100 {
            let mut rotated = false;
            for p in 0..d {
                for q in p + 1..d {
                    rotated |= self.rotate(p, q, tol);
                }
            }
            if !rotated {
                break;
            }
        }
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| self.log_scale[b].total_cmp(&self.log_scale[a]));
        self.dirs = DMatrix::from_columns(&order.iter().map(|&i| self.dirs.column(i)).collect::<Vec<_>>());
        self.log_scale = order.iter().map(|&i| self.log_scale[i]).collect();
    }

    fn rotate(&mut self, a: usize, b: usize, tol: f64) -> bool {
        // p carries the larger scale; ρ = e^{ℓ_q − ℓ_p} ≤ 1
        let (p, q) = if self.log_scale[a] >= self.log_scale[b] { (a, b) } else { (b, a) };
        let up = self.dirs.column(p).into_owned();
        let uq = self.dirs.column(q).into_owned();
        let g = up.dot(&uq);
        if g.abs() <= tol {
            return false;
        }
        let rho = (self.log_scale[q] - self.log_scale[p]).exp();
        let h = rho * rho - 1.0;
        let sign = if h < 0.0 { -1.0 } else { 1.0 };
        let denom = h + sign * (4.0 * rho * rho * g * g + h * h).sqrt();
        let t = 2.0 * rho * g / denom;
        let c = 1.0 / (1.0 + t * t).sqrt();
        let new_p: DVector<f64> = &up * c - &uq * (c * 2.0 * rho * rho * g / denom);
        let new_q: DVector<f64> = (&uq + &up * (2.0 * g / denom)) * c;
        let (np, nq) = (new_p.norm(), new_q.norm());
        self.dirs.set_column(p, &(new_p / np));
        self.dirs.set_column(q, &(new_q / nq));
        self.log_scale[p] += np.ln();
        self.log_scale[q] += nq.ln();
        true
    }
}

fn check_invertible(orbit: &CocycleOrbit, window: Range<i64>) -> Result<(), OracleError> {
    for index in window {
        let condition = condition_number(orbit.generator_at(index)?);
        if !(condition <= MAX_GENERATOR_CONDITION) {
            return Err(OracleError::NotInvertible { index, condition });
        }
    }
    Ok(())
}

/// Intersection of two subspaces whose dimensions add up to `d + m`: the
/// `m` directions of `a` closest to `b`.
fn intersect(a: &DMatrix<f64>, b: &DMatrix<f64>, m: usize) -> Result<DMatrix<f64>, OracleError> {
    let svd = (a.transpose() * b).svd(true, false);
    let u = svd.u.expect("requested U");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let cols: Vec<_> = order[..m].iter().map(|&i| u.column(i).into_owned()).collect();
    let coeffs = DMatrix::from_columns(&cols);
    Ok(orthonormalize(&(a * coeffs), DEFAULT_RANK_TOL)?.0.into_basis())
}

/// CLV blocks at `center` from singular vectors of the past and future products.
///
/// Uses generators `center - n1 .. center + n2`; every one of them must be
/// invertible. The result has the layout produced by Ginelli's algorithm.
pub fn svd_reference_clvs(
    orbit: &CocycleOrbit,
    multiplicities: &[usize],
    n1: usize,
    n2: usize,
    center: i64,
) -> Result<CLVResult, OracleError> {
    let d = orbit.ambient_dim();
    let k: usize = multiplicities.iter().sum();
    if multiplicities.contains(&0) || k == 0 || k > d {
        return Err(OracleError::BadRequest(format!("multiplicities {multiplicities:?} invalid for d = {d}")));
    }
    if n1 == 0 || n2 == 0 {
        return Err(OracleError::BadRequest("n1 and n2 must be positive".into()));
    }
    let window = center - n1 as i64..center + n2 as i64;
    orbit.check_window(window.start, n1 + n2)?;
    check_invertible(orbit, window.clone())?;

    let mut past = ScaledColumns::identity(d);
    for n in window.start..center {
        past.apply(orbit.generator_at(n)?);
    }
    let mut future = ScaledColumns::identity(d);
    for n in (center..window.end).rev() {
        future.apply(&orbit.generator_at(n)?.transpose());
    }

    let mut vectors = DMatrix::zeros(d, k);
    let mut blocks = Vec::with_capacity(multiplicities.len());
    let mut block_spans = Vec::with_capacity(multiplicities.len());
    let mut start = 0;
    for &m in multiplicities {
        let end = start + m;
        let leading = past.dirs.columns(0, end).into_owned();
        let trailing = future.dirs.columns(start, d - start).into_owned();
        let basis = intersect(&leading, &trailing, m)?;
        vectors.columns_mut(start, m).copy_from(&basis);
        block_spans.push(Subspace::from_basis_unchecked(basis));
        blocks.push(start..end);
        start = end;
    }
    Ok(CLVResult {
        vectors,
        blocks,
        block_spans,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::make_conjugated_diagonal;
    use crate::grassmann::grassmann_distance;
    use crate::rng::{gaussian_matrix, stream_rng};
    use std::f64::consts::LN_2;

    #[test]
    fn unconjugated_spaces_are_coordinate_blocks() {
        let spec = ConjugatedDiagonalSpec::new(vec![1.0, 1.0, 0.0, f64::NEG_INFINITY], 1.0, 0).unwrap();
        let oracle = OracleSplitting::new(spec).unwrap();
        let ys = oracle.spaces_at(5);
        assert_eq!(ys[0].basis(), Subspace::coordinate(4, 0..2).basis());
        assert_eq!(ys[1].basis(), Subspace::coordinate(4, 2..3).basis());
        assert_eq!(oracle.tail_at(5).unwrap().basis(), Subspace::coordinate(4, 3..4).basis());
        assert_eq!(oracle.exponents(), vec![1.0, 0.0]);
    }

    #[test]
    fn filtration_contains_later_spaces() {
        let spec = ConjugatedDiagonalSpec::new(vec![2.0, 1.0, 1.0, 0.0, -1.0], 6.0, 4).unwrap();
        let oracle = OracleSplitting::new(spec).unwrap();
        let ys = oracle.spaces_at(-3);
        let vs = oracle.filtration_at(-3);
        for (j, v) in vs.iter().enumerate() {
            for y in &ys[j..] {
                assert!(crate::grassmann::directed_gap(y, v).unwrap() < 1e-10);
            }
        }
    }

    #[test]
    fn scaled_jacobi_matches_plain_svd_on_mild_matrices() {
        let m = gaussian_matrix(&mut stream_rng(3, 0), 5, 5);
        let mut cols = ScaledColumns::identity(5);
        cols.apply(&m);
        let svd = m.clone().svd(true, false);
        let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        for (i, s) in sv.iter().enumerate() {
            assert!(((cols.log_scale[i] - cols.log_scale[0]).exp() - s / sv[0]).abs() < 1e-12);
        }
        assert!((cols.dirs.transpose() * &cols.dirs - DMatrix::identity(5, 5)).amax() < 1e-13);
        // U Σ spans the same column space as m with matching singular directions
        let u = svd.u.unwrap();
        let lead = u.column(svd.singular_values.imax()).into_owned();
        assert!((lead.dot(&cols.dirs.column(0)).abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_diagonal_blocks_are_axes() {
        let l = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0, 0.5]));
        let orbit = CocycleOrbit::constant(l, -40..40).unwrap();
        let res = svd_reference_clvs(&orbit, &[1, 1, 1], 40, 40, 0).unwrap();
        for j in 0..3 {
            let d = grassmann_distance(&res.block_spans[j], &Subspace::coordinate(3, j..j + 1)).unwrap();
            assert!(d < 1e-8);
        }
    }

    #[test]
    fn agrees_with_analytic_spaces() {
        let spec = ConjugatedDiagonalSpec::new(vec![4f64.ln(), LN_2, LN_2, 0.0, -LN_2], 8.0, 21).unwrap();
        let (orbit, oracle) = make_conjugated_diagonal(&spec, -60..60).unwrap();
        let res = svd_reference_clvs(&orbit, &oracle.multiplicities(), 60, 60, 0).unwrap();
        for (got, want) in res.block_spans.iter().zip(oracle.spaces_at(0)) {
            assert!(grassmann_distance(got, &want).unwrap() < 1e-6);
        }
    }

    #[test]
    fn rotation_single_block_is_everything() {
        let (s, c) = 0.4f64.sin_cos();
        let orbit = CocycleOrbit::constant(DMatrix::from_row_slice(2, 2, &[c, -s, s, c]), -10..10).unwrap();
        let res = svd_reference_clvs(&orbit, &[2], 10, 10, 0).unwrap();
        assert!(grassmann_distance(&res.block_spans[0], &Subspace::full(2)).unwrap() < 1e-14);
    }

    #[test]
    fn singular_generator_is_rejected() {
        let l = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.0]));
        let orbit = CocycleOrbit::constant(l, -3..3).unwrap();
        let err = svd_reference_clvs(&orbit, &[1], 3, 3, 0).unwrap_err();
        assert!(matches!(err, OracleError::NotInvertible { index: -3, .. }));
        assert_eq!(err.name(), "oracle::NotInvertible");
    }
}
