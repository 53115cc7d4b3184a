//! Linear cocycles along a finite window of an orbit.
//!
//! A [`CocycleOrbit`] stores the generators `L(σ^n ω)` for every `n` in a
//! half-open index window `[start, end)`. Products are never formed: vectors
//! are pushed through the generators one step at a time.

mod conjugated;
mod io;
mod ulam;

use std::ops::Range;

use nalgebra::DMatrix;
use thiserror::Error;

pub use conjugated::{conjugator, make_conjugated_diagonal, ConjugatedDiagonalSpec};
pub use io::{read_orbit_dir, write_orbit_dir, OrbitManifest, MANIFEST_FILE, MATRIX_MAGIC};
pub use ulam::{
    density_from_vector, make_ulam_transfer, refine_piecewise_constant, ulam_matrix, UlamTransferSpec,
};

use crate::linalg::is_finite;

#[derive(Debug, Error)]
pub enum CocycleError {
    #[error("index {index} outside orbit window [{start}, {end})")]
    OutOfRange { index: i64, start: i64, end: i64 },
    #[error("bad spec: {0}")]
    BadSpec(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed orbit data: {0}")]
    Format(String),
}

impl CocycleError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::OutOfRange { .. } => "cocycle::OutOfRange",
            Self::BadSpec(_) => "cocycle::BadSpec",
            Self::ShapeMismatch(_) => "cocycle::ShapeMismatch",
            Self::Io { .. } => "cocycle::Io",
            Self::Format(_) => "cocycle::Format",
        }
    }
}

/// Generators `L(σ^n ω)` for `n ∈ [start, start + len)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CocycleOrbit {
    ambient_dim: usize,
    start: i64,
    generators: Vec<DMatrix<f64>>,
}

impl CocycleOrbit {
    /// Orbit whose first generator sits at index `start`.
    pub fn new(start: i64, generators: Vec<DMatrix<f64>>) -> Result<Self, CocycleError> {
        let first = generators
            .first()
            .ok_or_else(|| CocycleError::ShapeMismatch("orbit needs at least one generator".into()))?;
        let d = first.nrows();
        if d == 0 {
            return Err(CocycleError::ShapeMismatch("ambient dimension must be positive".into()));
        }
        for (offset, g) in generators.iter().enumerate() {
            let index = start + offset as i64;
            if g.shape() != (d, d) {
                return Err(CocycleError::ShapeMismatch(format!(
                    "generator at {index} is {}x{}, expected {d}x{d}",
                    g.nrows(),
                    g.ncols()
                )));
            }
            if !is_finite(g) {
                return Err(CocycleError::Format(format!("generator at {index} has non-finite entries")));
            }
        }
        Ok(Self {
            ambient_dim: d,
            start,
            generators,
        })
    }

    /// The same generator at every index of `range`.
    pub fn constant(generator: DMatrix<f64>, range: Range<i64>) -> Result<Self, CocycleError> {
        let len = window_len(&range)?;
        Self::new(range.start, vec![generator; len])
    }

    /// Generators produced by `f(n)` for each `n` in `range`.
    pub fn from_fn<F>(range: Range<i64>, f: F) -> Result<Self, CocycleError>
    where
        F: FnMut(i64) -> DMatrix<f64>,
    {
        window_len(&range)?;
        Self::new(range.start, range.map(f).collect())
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn range(&self) -> Range<i64> {
        self.start..self.start + self.generators.len() as i64
    }

    pub fn generator_at(&self, index: i64) -> Result<&DMatrix<f64>, CocycleError> {
        let range = self.range();
        if !range.contains(&index) {
            return Err(CocycleError::OutOfRange {
                index,
                start: range.start,
                end: range.end,
            });
        }
        Ok(&self.generators[(index - self.start) as usize])
    }

    /// Fails unless `[from, from + steps)` lies inside the window.
    pub fn check_window(&self, from: i64, steps: usize) -> Result<(), CocycleError> {
        if steps == 0 {
            return Ok(());
        }
        self.generator_at(from)?;
        self.generator_at(from + steps as i64 - 1)?;
        Ok(())
    }

    /// `L^{(steps)}_{σ^from ω} · vectors`, applied one generator at a time.
    pub fn push_forward(
        &self,
        from: i64,
        steps: usize,
        vectors: &DMatrix<f64>,
    ) -> Result<DMatrix<f64>, CocycleError> {
        if vectors.nrows() != self.ambient_dim {
            return Err(CocycleError::ShapeMismatch(format!(
                "vectors have {} rows, orbit dimension is {}",
                vectors.nrows(),
                self.ambient_dim
            )));
        }
        self.check_window(from, steps)?;
        let mut out = vectors.clone();
        for n in from..from + steps as i64 {
            out = self.generator_at(n)? * out;
        }
        Ok(out)
    }

    /// Sub-window `range` of this orbit.
    pub fn restrict(&self, range: Range<i64>) -> Result<CocycleOrbit, CocycleError> {
        let len = window_len(&range)?;
        self.check_window(range.start, len)?;
        let offset = (range.start - self.start) as usize;
        Ok(Self {
            ambient_dim: self.ambient_dim,
            start: range.start,
            generators: self.generators[offset..offset + len].to_vec(),
        })
    }

    pub(crate) fn generators(&self) -> &[DMatrix<f64>] {
        &self.generators
    }
}

fn window_len(range: &Range<i64>) -> Result<usize, CocycleError> {
    if range.end <= range.start {
        return Err(CocycleError::ShapeMismatch(format!(
            "empty orbit window [{}, {})",
            range.start, range.end
        )));
    }
    Ok((range.end - range.start) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_row_slice(v))
    }

    #[test]
    fn zero_steps_is_identity() {
        let orbit = CocycleOrbit::constant(diag(&[2.0, 0.5]), 0..5).unwrap();
        let v = DMatrix::from_column_slice(2, 1, &[0.3, -1.7]);
        assert_eq!(orbit.push_forward(3, 0, &v).unwrap(), v);
    }

    #[test]
    fn diagonal_powers() {
        let orbit = CocycleOrbit::constant(diag(&[2.0, 0.5]), 0..10).unwrap();
        let v = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        let out = orbit.push_forward(0, 10, &v).unwrap();
        assert_eq!(out[(0, 0)], 1024.0);
        assert_eq!(out[(1, 0)], 1.0 / 1024.0);
    }

    #[test]
    fn rotation_has_period_four() {
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let orbit = CocycleOrbit::constant(rot, -2..2).unwrap();
        let e1 = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let out = orbit.push_forward(-2, 4, &e1).unwrap();
        assert!((out - e1).amax() < 1e-12);
    }

    #[test]
    fn window_is_enforced() {
        let orbit = CocycleOrbit::constant(diag(&[1.0]), -3..3).unwrap();
        let v = DMatrix::from_element(1, 1, 1.0);
        assert!(orbit.push_forward(-3, 6, &v).is_ok());
        assert!(matches!(
            orbit.push_forward(-3, 7, &v),
            Err(CocycleError::OutOfRange { index: 3, .. })
        ));
        assert!(matches!(orbit.generator_at(-4), Err(CocycleError::OutOfRange { .. })));
    }

    #[test]
    fn composition_splits_exactly() {
        let orbit = CocycleOrbit::from_fn(0..12, |n| {
            DMatrix::from_fn(3, 3, |i, j| ((i * 7 + j * 3 + n as usize) % 5) as f64 - 1.7)
        })
        .unwrap();
        let v = DMatrix::from_fn(3, 2, |i, j| (i + 2 * j) as f64 + 0.25);
        let whole = orbit.push_forward(1, 9, &v).unwrap();
        let first = orbit.push_forward(1, 4, &v).unwrap();
        let split = orbit.push_forward(5, 5, &first).unwrap();
        assert_eq!(whole, split);
    }

    #[test]
    fn rejects_ragged_generators() {
        let err = CocycleOrbit::new(0, vec![diag(&[1.0, 2.0]), diag(&[1.0])]).unwrap_err();
        assert!(matches!(err, CocycleError::ShapeMismatch(_)));
    }
}
