//! Subspaces of a finite-dimensional truncation and the Grassmannian
//! machinery built on them.
//!
//! A [`Subspace`] is held as an orthonormal basis. Closed subspaces of
//! codimension `k` are stored as `(d - k)`-dimensional subspaces of the
//! truncation, so every quantity below reduces to small dense linear algebra:
//!
//! - the metric [`grassmann_distance`] is the Hausdorff distance between the
//!   unit-ball slices `V ∩ B` and `W ∩ B`;
//! - [`directed_gap`] is one half of it, `sup_{v ∈ V∩B} d(v, W∩B)`;
//! - [`transversality_degree`] is `inf_{x ∈ W∩S} d(x, V)`;
//! - [`oblique_project`] and [`projection_norm`] act on a [`SplittingPair`].
//!
//! For a unit vector `v` and a subspace `W` the nearest point of `W ∩ B` is the
//! orthogonal projection `P_W v` (it has norm at most one), so the distances to
//! `W ∩ B` and to `W` coincide and everything is computed via orthogonal
//! projections and singular values.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg::{
    condition_number, is_finite, orthogonal_residual, smallest_singular_value, spectral_norm,
};
use crate::rng::{gaussian_matrix, stream_rng};

/// Default relative rank tolerance for [`orthonormalize`].
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Splittings whose concatenated basis is worse conditioned than this are rejected.
pub const MAX_SPLITTING_CONDITION: f64 = 1e14;

const ORTHONORMAL_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrassmannError {
    #[error("rank deficient: column {column_index} collapsed onto the preceding columns")]
    RankDeficient { column_index: usize },
    #[error("ambient dimension mismatch: {left} vs {right}")]
    AmbientMismatch { left: usize, right: usize },
    #[error("ill-conditioned splitting: condition number {condition:e} exceeds 1e14")]
    IllConditionedSplitting { condition: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("basis columns are not orthonormal (max deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },
    #[error("empty or non-finite input")]
    InvalidInput,
}

impl GrassmannError {
    /// Qualified error name, printed by the command-line front end.
    pub fn name(&self) -> &'static str {
        match self {
            Self::RankDeficient { .. } => "grassmann::RankDeficient",
            Self::AmbientMismatch { .. } => "grassmann::AmbientMismatch",
            Self::IllConditionedSplitting { .. } => "grassmann::IllConditionedSplitting",
            Self::DimensionMismatch(_) => "grassmann::DimensionMismatch",
            Self::NotOrthonormal { .. } => "grassmann::NotOrthonormal",
            Self::InvalidInput => "grassmann::InvalidInput",
        }
    }
}

/// A `k`-dimensional subspace of `R^d`, `1 ≤ k ≤ d`, held as a `d × k`
/// orthonormal basis.
///
/// The basis is not canonical: two values with the same span are "equal" in
/// the sense that their [`grassmann_distance`] is zero, not under `==`.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

impl Subspace {
    /// Wraps a basis that is already orthonormal to within `1e-12` entrywise.
    pub fn from_orthonormal(basis: DMatrix<f64>) -> Result<Self, GrassmannError> {
        if basis.ncols() == 0 || basis.ncols() > basis.nrows() || !is_finite(&basis) {
            return Err(GrassmannError::InvalidInput);
        }
        let gram = basis.transpose() * &basis;
        let deviation = (gram - DMatrix::identity(basis.ncols(), basis.ncols())).amax();
        if deviation > ORTHONORMAL_TOL {
            return Err(GrassmannError::NotOrthonormal { deviation });
        }
        Ok(Self { basis })
    }

    /// Span of the columns of `vectors` (orthonormalized with the default tolerance).
    pub fn span(vectors: &DMatrix<f64>) -> Result<Self, GrassmannError> {
        orthonormalize(vectors, DEFAULT_RANK_TOL).map(|(s, _)| s)
    }

    /// `span(e_i : i ∈ indices)` in `R^d`.
    pub fn coordinate(ambient_dim: usize, indices: Range<usize>) -> Self {
        assert!(indices.start < indices.end && indices.end <= ambient_dim);
        let mut basis = DMatrix::zeros(ambient_dim, indices.len());
        for (c, i) in indices.enumerate() {
            basis[(i, c)] = 1.0;
        }
        Self { basis }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self::coordinate(ambient_dim, 0..ambient_dim)
    }

    pub(crate) fn from_basis_unchecked(basis: DMatrix<f64>) -> Self {
        debug_assert!(basis.ncols() >= 1 && basis.ncols() <= basis.nrows());
        Self { basis }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn into_basis(self) -> DMatrix<f64> {
        self.basis
    }

    /// Orthogonal projection of `x` onto the subspace.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.basis * (self.basis.transpose() * x)
    }

    /// Orthogonal complement, or `None` for the full space.
    ///
    /// Built greedily from coordinate vectors: at each step the coordinate
    /// vector with the largest residual against the current basis is added.
    pub fn orthogonal_complement(&self) -> Option<Subspace> {
        let d = self.ambient_dim();
        let k = self.dim();
        if k == d {
            return None;
        }
        let mut cols: Vec<DVector<f64>> = self.basis.column_iter().map(|c| c.into_owned()).collect();
        let mut out = Vec::with_capacity(d - k);
        for _ in 0..d - k {
            let mut best: Option<DVector<f64>> = None;
            let mut best_norm = -1.0;
            for i in 0..d {
                let mut v = DVector::zeros(d);
                v[i] = 1.0;
                for _pass in 0..2 {
                    for q in &cols {
                        let c = q.dot(&v);
                        v.axpy(-c, q, 1.0);
                    }
                }
                let n = v.norm();
                if n > best_norm {
                    best_norm = n;
                    best = Some(v / n);
                }
            }
            let v = best.expect("ambient dimension is positive");
            cols.push(v.clone());
            out.push(v);
        }
        Some(Self {
            basis: DMatrix::from_columns(&out),
        })
    }

    /// Span of the union of two subspaces' bases (e.g. `Y₁ ⊕ Y₂`).
    pub fn join(&self, other: &Subspace) -> Result<Subspace, GrassmannError> {
        check_ambient(self, other)?;
        let mut m = DMatrix::zeros(self.ambient_dim(), self.dim() + other.dim());
        m.columns_mut(0, self.dim()).copy_from(&self.basis);
        m.columns_mut(self.dim(), other.dim()).copy_from(&other.basis);
        Subspace::span(&m)
    }
}

fn check_ambient(a: &Subspace, b: &Subspace) -> Result<(), GrassmannError> {
    if a.ambient_dim() != b.ambient_dim() {
        return Err(GrassmannError::AmbientMismatch {
            left: a.ambient_dim(),
            right: b.ambient_dim(),
        });
    }
    Ok(())
}

/// Modified Gram–Schmidt with one reorthogonalization pass.
///
/// Returns the span as a [`Subspace`] together with the `k × k`
/// upper-triangular `R` with strictly positive diagonal such that
/// `vectors = basis · R`. Column `j` is rejected as
/// [`GrassmannError::RankDeficient`] when `R[j, j] ≤ tol · max_i R[i, i]`.
///
/// The computation of column `j` only reads columns `0..=j`, so the leading
/// columns of the result do not depend on trailing input columns.
pub fn orthonormalize(
    vectors: &DMatrix<f64>,
    tol: f64,
) -> Result<(Subspace, DMatrix<f64>), GrassmannError> {
    let (d, k) = vectors.shape();
    if d == 0 || k == 0 || !is_finite(vectors) {
        return Err(GrassmannError::InvalidInput);
    }
    if k > d {
        return Err(GrassmannError::RankDeficient { column_index: d });
    }
    let mut q = vectors.clone();
    let mut r = DMatrix::zeros(k, k);
    for j in 0..k {
        let mut v = q.column(j).into_owned();
        for _pass in 0..2 {
            for i in 0..j {
                let qi = q.column(i);
                let c = qi.dot(&v);
                r[(i, j)] += c;
                v.axpy(-c, &qi, 1.0);
            }
        }
        let norm = v.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(GrassmannError::RankDeficient { column_index: j });
        }
        r[(j, j)] = norm;
        q.set_column(j, &(v / norm));
    }
    let largest = (0..k).map(|i| r[(i, i)]).fold(0.0, f64::max);
    if let Some(j) = (0..k).find(|&j| r[(j, j)] <= tol * largest) {
        return Err(GrassmannError::RankDeficient { column_index: j });
    }
    Ok((Subspace { basis: q }, r))
}

/// `sup_{v ∈ V∩B} d(v, W∩B)`, computed as the spectral norm of `(I − P_W) V`.
///
/// Zero when `V ⊆ W`; equal to one when `dim V > dim W`.
pub fn directed_gap(v: &Subspace, w: &Subspace) -> Result<f64, GrassmannError> {
    check_ambient(v, w)?;
    let residual = orthogonal_residual(&w.basis, &v.basis);
    Ok(spectral_norm(&residual).clamp(0.0, 1.0))
}

/// Hausdorff distance between `V ∩ B` and `W ∩ B`.
///
/// For equal dimensions this is the sine of the largest principal angle.
/// Subspaces of different dimension are at distance `1` by convention.
pub fn grassmann_distance(v: &Subspace, w: &Subspace) -> Result<f64, GrassmannError> {
    check_ambient(v, w)?;
    if v.dim() != w.dim() {
        return Ok(1.0);
    }
    Ok(directed_gap(v, w)?.max(directed_gap(w, v)?))
}

/// Degree of transversality `inf_{x ∈ W∩S} d(x, V)`.
///
/// Computed as the smallest singular value of `(I − P_V) W`; it is zero iff
/// `W ∩ V ≠ {0}`.
pub fn transversality_degree(w: &Subspace, v: &Subspace) -> Result<f64, GrassmannError> {
    check_ambient(w, v)?;
    if w.dim() + v.dim() > w.ambient_dim() {
        return Ok(0.0);
    }
    let residual = orthogonal_residual(&v.basis, &w.basis);
    Ok(smallest_singular_value(&residual).clamp(0.0, 1.0))
}

/// Principal angles between two subspaces in ascending order (radians).
///
/// Small angles are taken from the sines (singular values of the residual of
/// the smaller space against the larger) and large ones from the cosines, so
/// both ends of the range keep full relative accuracy.
pub fn principal_angles(v: &Subspace, w: &Subspace) -> Result<Vec<f64>, GrassmannError> {
    check_ambient(v, w)?;
    let (small, large) = if v.dim() <= w.dim() { (v, w) } else { (w, v) };
    let mut cosines: Vec<f64> = (small.basis.transpose() * &large.basis).singular_values().iter().copied().collect();
    cosines.sort_by(|a, b| b.total_cmp(a));
    let mut sines: Vec<f64> =
        orthogonal_residual(&large.basis, &small.basis).singular_values().iter().copied().collect();
    sines.sort_by(f64::total_cmp);
    Ok(cosines
        .iter()
        .zip(&sines)
        .map(|(&c, &s)| {
            if c >= std::f64::consts::FRAC_1_SQRT_2 {
                s.clamp(0.0, 1.0).asin()
            } else {
                c.clamp(0.0, 1.0).acos()
            }
        })
        .collect())
}

/// A direct-sum decomposition `R^d = Y ⊕ Z`.
#[derive(Debug, Clone)]
pub struct SplittingPair {
    y: Subspace,
    z: Subspace,
    // rows 0..k give Y-coordinates, rows k..d give Z-coordinates
    coords: DMatrix<f64>,
}

impl SplittingPair {
    pub fn new(y: Subspace, z: Subspace) -> Result<Self, GrassmannError> {
        check_ambient(&y, &z)?;
        let d = y.ambient_dim();
        if y.dim() + z.dim() != d {
            return Err(GrassmannError::DimensionMismatch(format!(
                "dim Y + dim Z = {} + {} but ambient dimension is {d}",
                y.dim(),
                z.dim()
            )));
        }
        let mut joined = DMatrix::zeros(d, d);
        joined.columns_mut(0, y.dim()).copy_from(&y.basis);
        joined.columns_mut(y.dim(), z.dim()).copy_from(&z.basis);
        let condition = condition_number(&joined);
        if !(condition <= MAX_SPLITTING_CONDITION) {
            return Err(GrassmannError::IllConditionedSplitting { condition });
        }
        let coords = joined
            .try_inverse()
            .ok_or(GrassmannError::IllConditionedSplitting { condition })?;
        Ok(Self { y, z, coords })
    }

    pub fn y(&self) -> &Subspace {
        &self.y
    }

    pub fn z(&self) -> &Subspace {
        &self.z
    }

    pub fn ambient_dim(&self) -> usize {
        self.y.ambient_dim()
    }

    /// Matrix of `Π_{Y||Z}` (`onto_y`) or `Π_{Z||Y}`.
    pub fn projector(&self, onto_y: bool) -> DMatrix<f64> {
        let k = self.y.dim();
        if onto_y {
            &self.y.basis * self.coords.rows(0, k)
        } else {
            &self.z.basis * self.coords.rows(k, self.z.dim())
        }
    }

    /// Norm of the projector restricted to `domain`, i.e. `‖Π|_domain‖`.
    pub fn restricted_norm(&self, onto_y: bool, domain: &Subspace) -> Result<f64, GrassmannError> {
        if domain.ambient_dim() != self.ambient_dim() {
            return Err(GrassmannError::AmbientMismatch {
                left: self.ambient_dim(),
                right: domain.ambient_dim(),
            });
        }
        Ok(spectral_norm(&(self.projector(onto_y) * &domain.basis)))
    }
}

/// Splits `x = y_part + z_part` along the pair.
pub fn oblique_project(
    pair: &SplittingPair,
    x: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>), GrassmannError> {
    if x.len() != pair.ambient_dim() {
        return Err(GrassmannError::AmbientMismatch {
            left: pair.ambient_dim(),
            right: x.len(),
        });
    }
    let k = pair.y.dim();
    let c = &pair.coords * x;
    let y_part = &pair.y.basis * c.rows(0, k);
    let z_part = &pair.z.basis * c.rows(k, pair.z.dim());
    Ok((y_part, z_part))
}

/// Operator norm of `Π_{Y||Z}` (`onto_y`) or `Π_{Z||Y}`.
pub fn projection_norm(pair: &SplittingPair, onto_y: bool) -> f64 {
    spectral_norm(&pair.projector(onto_y))
}

/// Span of `k` i.i.d. standard Gaussian vectors in `R^d`, deterministic in `seed`.
pub fn sample_complement(ambient_dim: usize, k: usize, seed: u64) -> Result<Subspace, GrassmannError> {
    if k == 0 || k > ambient_dim {
        return Err(GrassmannError::DimensionMismatch(format!(
            "cannot sample a {k}-dimensional subspace of R^{ambient_dim}"
        )));
    }
    let mut rng = stream_rng(seed, 0);
    let first = orthonormalize(&gaussian_matrix(&mut rng, ambient_dim, k), DEFAULT_RANK_TOL);
    match first {
        Ok((s, _)) => Ok(s),
        Err(GrassmannError::RankDeficient { .. }) => {
            orthonormalize(&gaussian_matrix(&mut rng, ambient_dim, k), DEFAULT_RANK_TOL).map(|(s, _)| s)
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn line(v: &[f64]) -> Subspace {
        Subspace::span(&DMatrix::from_column_slice(v.len(), 1, v)).unwrap()
    }

    fn cols(d: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(d, data.len() / d, data)
    }

    #[test]
    fn orthonormalize_identity_columns() {
        let (s, r) = orthonormalize(&cols(3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(s.basis(), &cols(3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]));
        assert_eq!(r, DMatrix::identity(2, 2));
    }

    #[test]
    fn orthonormalize_single_column() {
        let (s, r) = orthonormalize(&cols(3, &[3.0, 4.0, 0.0]), DEFAULT_RANK_TOL).unwrap();
        assert!((s.basis()[(0, 0)] - 0.6).abs() < 1e-15);
        assert!((s.basis()[(1, 0)] - 0.8).abs() < 1e-15);
        assert_eq!(s.basis()[(2, 0)], 0.0);
        assert!((r[(0, 0)] - 5.0).abs() < 1e-15);
    }

    #[test]
    fn orthonormalize_repeated_column_is_rank_deficient() {
        let err = orthonormalize(&cols(3, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]), DEFAULT_RANK_TOL).unwrap_err();
        assert_eq!(err, GrassmannError::RankDeficient { column_index: 1 });
    }

    #[test]
    fn orthonormalize_nearly_dependent_column_uses_relative_tolerance() {
        let m = cols(2, &[1.0, 0.0, 1.0, 1e-12]);
        assert!(matches!(
            orthonormalize(&m, 1e-10),
            Err(GrassmannError::RankDeficient { column_index: 1 })
        ));
        assert!(orthonormalize(&m, 1e-13).is_ok());
    }

    #[test]
    fn distance_examples() {
        let e1 = line(&[1.0, 0.0]);
        let e2 = line(&[0.0, 1.0]);
        assert_eq!(grassmann_distance(&e1, &e1).unwrap(), 0.0);
        assert!((grassmann_distance(&e1, &e2).unwrap() - 1.0).abs() < 1e-15);
        let diag = line(&[1.0, 1.0]);
        assert!((grassmann_distance(&e1, &diag).unwrap() - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    /// Brute-force Hausdorff distance between two discretized unit segments.
    #[test]
    fn diagonal_distance_matches_discretized_hausdorff() {
        let n = 2001;
        let pts = |u: [f64; 2]| -> Vec<[f64; 2]> {
            (0..n)
                .map(|i| {
                    let t = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
                    [t * u[0], t * u[1]]
                })
                .collect()
        };
        let a = pts([1.0, 0.0]);
        let b = pts([FRAC_1_SQRT_2, FRAC_1_SQRT_2]);
        let directed = |p: &[[f64; 2]], q: &[[f64; 2]]| {
            p.iter()
                .map(|x| {
                    q.iter()
                        .map(|y| ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt())
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max)
        };
        let brute = directed(&a, &b).max(directed(&b, &a));
        let d = grassmann_distance(&line(&[1.0, 0.0]), &line(&[1.0, 1.0])).unwrap();
        assert!((brute - d).abs() < 1e-3, "brute {brute} vs {d}");
    }

    #[test]
    fn unequal_dimensions_are_at_distance_one() {
        let a = Subspace::coordinate(3, 0..1);
        let b = Subspace::coordinate(3, 0..2);
        assert_eq!(grassmann_distance(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn ambient_mismatch_is_reported() {
        let a = Subspace::coordinate(3, 0..1);
        let b = Subspace::coordinate(2, 0..1);
        assert!(matches!(grassmann_distance(&a, &b), Err(GrassmannError::AmbientMismatch { .. })));
        assert!(matches!(directed_gap(&a, &b), Err(GrassmannError::AmbientMismatch { .. })));
    }

    #[test]
    fn directed_gap_examples() {
        let e1 = Subspace::coordinate(3, 0..1);
        let e12 = Subspace::coordinate(3, 0..2);
        assert_eq!(directed_gap(&e1, &e12).unwrap(), 0.0);
        assert!((directed_gap(&e12, &e1).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn directed_gap_matches_sampled_supremum() {
        let v = sample_complement(4, 2, 11).unwrap();
        let w = sample_complement(4, 2, 12).unwrap();
        let exact = directed_gap(&v, &w).unwrap();
        let mut sup: f64 = 0.0;
        let samples = 100_000;
        for i in 0..samples {
            let t = 2.0 * std::f64::consts::PI * i as f64 / samples as f64;
            let x = v.basis() * DVector::from_vec(vec![t.cos(), t.sin()]);
            // nearest point of W ∩ B: project onto W, then clamp into the ball
            let p = w.project(&x);
            let p = if p.norm() > 1.0 { &p / p.norm() } else { p };
            sup = sup.max((x - p).norm());
        }
        assert!((sup - exact).abs() < 1e-3, "sampled {sup} vs {exact}");
    }

    #[test]
    fn transversality_examples() {
        let e1 = Subspace::coordinate(3, 0..1);
        let e23 = Subspace::coordinate(3, 1..3);
        let e12 = Subspace::coordinate(3, 0..2);
        assert!((transversality_degree(&e1, &e23).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(transversality_degree(&e1, &e12).unwrap(), 0.0);
        let diag = line(&[1.0, 1.0, 0.0]);
        let t = transversality_degree(&diag, &e23).unwrap();
        assert!((t - FRAC_1_SQRT_2).abs() < 1e-15);
        // sampling the unit circle of W (a line: two points) gives the same value
        let x = diag.basis().column(0).into_owned();
        let sampled = (&x - e23.project(&x)).norm();
        assert!((sampled - t).abs() < 1e-15);
    }

    #[test]
    fn transversality_matches_largest_singular_value_identity() {
        for seed in 0..50 {
            let w = sample_complement(6, 2, seed).unwrap();
            let v = sample_complement(6, 3, 1000 + seed).unwrap();
            let t = transversality_degree(&w, &v).unwrap();
            let smax = (v.basis().transpose() * w.basis()).singular_values().max();
            assert!((t - (1.0 - smax * smax).max(0.0).sqrt()).abs() < 1e-8);
        }
    }

    #[test]
    fn oblique_projection_examples() {
        let pair = SplittingPair::new(line(&[1.0, 0.0]), line(&[0.0, 1.0])).unwrap();
        let (y, z) = oblique_project(&pair, &DVector::from_vec(vec![3.0, 5.0])).unwrap();
        assert!((y - DVector::from_vec(vec![3.0, 0.0])).amax() < 1e-15);
        assert!((z - DVector::from_vec(vec![0.0, 5.0])).amax() < 1e-15);

        let pair = SplittingPair::new(line(&[1.0, 0.0]), line(&[1.0, 1.0])).unwrap();
        let (y, z) = oblique_project(&pair, &DVector::from_vec(vec![0.0, 1.0])).unwrap();
        assert!((y - DVector::from_vec(vec![-1.0, 0.0])).amax() < 1e-14);
        assert!((z - DVector::from_vec(vec![1.0, 1.0])).amax() < 1e-14);

        let (y, z) = oblique_project(&pair, &DVector::zeros(2)).unwrap();
        assert_eq!(y.amax(), 0.0);
        assert_eq!(z.amax(), 0.0);
    }

    #[test]
    fn projection_norm_examples() {
        let orth = SplittingPair::new(line(&[1.0, 0.0]), line(&[0.0, 1.0])).unwrap();
        assert!((projection_norm(&orth, true) - 1.0).abs() < 1e-15);
        let oblique = SplittingPair::new(line(&[1.0, 0.0]), line(&[1.0, 1.0])).unwrap();
        assert!((projection_norm(&oblique, true) - 2f64.sqrt()).abs() < 1e-14);
        for &theta in &[1.2, 0.5, 0.1, 0.01, 1e-3] {
            let z = line(&[f64::cos(theta), f64::sin(theta)]);
            let pair = SplittingPair::new(line(&[1.0, 0.0]), z).unwrap();
            let expected = 1.0 / f64::sin(theta).abs();
            assert!((projection_norm(&pair, true) - expected).abs() < 1e-9, "theta {theta}");
        }
    }

    #[test]
    fn degenerate_splitting_is_rejected() {
        assert!(matches!(
            SplittingPair::new(line(&[1.0, 0.0]), line(&[1.0, 1e-16])),
            Err(GrassmannError::IllConditionedSplitting { .. })
        ));
        assert!(matches!(
            SplittingPair::new(line(&[1.0, 0.0, 0.0]), line(&[0.0, 1.0, 0.0])),
            Err(GrassmannError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn sample_complement_examples() {
        let full = sample_complement(3, 3, 5).unwrap();
        assert!(grassmann_distance(&full, &Subspace::full(3)).unwrap() < 1e-14);
        assert_eq!(sample_complement(5, 2, 7).unwrap().basis(), sample_complement(5, 2, 7).unwrap().basis());
        let v = Subspace::coordinate(50, 3..50);
        for seed in 0..100 {
            let w = sample_complement(50, 3, seed).unwrap();
            assert!(transversality_degree(&w, &v).unwrap() > 0.0);
        }
    }

    #[test]
    fn orthogonal_complement_is_orthogonal_and_complementary() {
        let s = sample_complement(5, 2, 3).unwrap();
        let c = s.orthogonal_complement().unwrap();
        assert_eq!(c.dim(), 3);
        assert!((s.basis().transpose() * c.basis()).amax() < 1e-14);
        assert!(Subspace::full(4).orthogonal_complement().is_none());
    }

    #[test]
    fn from_orthonormal_rejects_skewed_basis() {
        let m = cols(2, &[1.0, 0.0, 1.0, 1.0]);
        assert!(matches!(Subspace::from_orthonormal(m), Err(GrassmannError::NotOrthonormal { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn oblique_projection_is_idempotent_and_sums_to_input(
            seed in 0u64..10_000, d in 2usize..7, k_frac in 0.0f64..1.0,
        ) {
            let k = 1 + ((d - 1) as f64 * k_frac) as usize % (d - 1);
            let y = sample_complement(d, k, seed).unwrap();
            let z = sample_complement(d, d - k, seed + 77_777).unwrap();
            let pair = SplittingPair::new(y, z).unwrap();
            let x = gaussian_matrix(&mut stream_rng(seed, 9), d, 1).column(0).into_owned();
            let (yp, zp) = oblique_project(&pair, &x).unwrap();
            prop_assert!((&yp + &zp - &x).amax() < 1e-10 * (1.0 + x.amax()));
            let (yy, yz) = oblique_project(&pair, &yp).unwrap();
            let scale = 1.0 + yp.amax();
            prop_assert!((yy - &yp).amax() < 1e-12 * scale * projection_norm(&pair, true));
            prop_assert!(yz.amax() < 1e-12 * scale * projection_norm(&pair, true));
        }

        #[test]
        fn projection_norm_ignores_basis_choice(seed in 0u64..10_000, d in 2usize..7) {
            let k = 1 + (seed as usize) % (d - 1);
            let y = sample_complement(d, k, seed).unwrap();
            let z = sample_complement(d, d - k, seed + 1).unwrap();
            let rot = |s: &Subspace, salt: u64| {
                let (q, _) = orthonormalize(&gaussian_matrix(&mut stream_rng(seed, salt), s.dim(), s.dim()), 1e-10).unwrap();
                Subspace::from_orthonormal(s.basis() * q.basis()).unwrap()
            };
            let a = SplittingPair::new(y.clone(), z.clone()).unwrap();
            let b = SplittingPair::new(rot(&y, 1), rot(&z, 2)).unwrap();
            for onto_y in [true, false] {
                let (na, nb) = (projection_norm(&a, onto_y), projection_norm(&b, onto_y));
                prop_assert!((na - nb).abs() < 1e-12 * na.max(1.0), "{} vs {}", na, nb);
            }
        }
    }
}
