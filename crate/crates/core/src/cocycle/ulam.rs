//! Ulam discretizations of driven expanding circle maps.
//!
//! The step-`n` map is `x ↦ m·x + ε·sin(2πx + φ_n) mod 1`, with phase
//! `φ_n = 2π·U_n` and `U_n` uniform from the stream of index `n`. Its Ulam
//! matrix acts on bin densities: `P[i, j]` is the fraction of bin `j` that
//! lands in bin `i`, estimated from evenly spaced midpoints in each bin.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{CocycleError, CocycleOrbit};
use crate::rng::index_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UlamTransferSpec {
    pub bins: usize,
    /// Integer expansion factor `m ≥ 2`.
    pub expansion: u32,
    pub eps: f64,
    pub seed: u64,
    pub samples_per_bin: usize,
}

impl UlamTransferSpec {
    pub const DEFAULT_SAMPLES_PER_BIN: usize = 256;

    pub fn new(bins: usize, expansion: u32, eps: f64, seed: u64) -> Result<Self, CocycleError> {
        let spec = Self {
            bins,
            expansion,
            eps,
            seed,
            samples_per_bin: Self::DEFAULT_SAMPLES_PER_BIN,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), CocycleError> {
        if self.expansion < 2 {
            return Err(CocycleError::BadSpec(format!("expansion must be >= 2, got {}", self.expansion)));
        }
        if !self.eps.is_finite() {
            return Err(CocycleError::BadSpec("eps must be finite".into()));
        }
        let min_derivative = f64::from(self.expansion) - 2.0 * std::f64::consts::PI * self.eps.abs();
        if !(min_derivative > 1.0) {
            return Err(CocycleError::BadSpec(format!(
                "map is not uniformly expanding: m - 2π|eps| = {min_derivative}"
            )));
        }
        if self.bins < 8 {
            return Err(CocycleError::BadSpec(format!("need at least 8 bins, got {}", self.bins)));
        }
        if self.samples_per_bin < 100 {
            return Err(CocycleError::BadSpec(format!(
                "need at least 100 samples per bin, got {}",
                self.samples_per_bin
            )));
        }
        Ok(())
    }

    /// Phase `φ_n`; depends on the seed and index only, not on the bin count.
    pub fn phase(&self, index: i64) -> f64 {
        2.0 * std::f64::consts::PI * index_rng(self.seed, index).random::<f64>()
    }
}

/// Ulam matrix of the step-`index` map.
pub fn ulam_matrix(spec: &UlamTransferSpec, index: i64) -> DMatrix<f64> {
    let nb = spec.bins;
    let q = spec.samples_per_bin;
    let m = f64::from(spec.expansion);
    let phase = spec.phase(index);
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut counts = vec![0u32; nb * nb];
    for j in 0..nb {
        for s in 0..q {
            let x = (j as f64 + (s as f64 + 0.5) / q as f64) / nb as f64;
            let y = (m * x + spec.eps * (two_pi * x + phase).sin()).rem_euclid(1.0);
            let i = ((y * nb as f64) as usize).min(nb - 1);
            counts[j * nb + i] += 1;
        }
    }
    DMatrix::from_vec(nb, nb, counts.into_iter().map(|c| f64::from(c) / q as f64).collect())
}

pub fn make_ulam_transfer(spec: &UlamTransferSpec, range: Range<i64>) -> Result<CocycleOrbit, CocycleError> {
    spec.validate()?;
    if range.end <= range.start {
        return Err(CocycleError::ShapeMismatch("empty orbit window".into()));
    }
    CocycleOrbit::from_fn(range, |n| ulam_matrix(spec, n))
}

/// Turns a bin vector into a probability density on the circle: the sign is
/// fixed so the mass is positive and the values are scaled to integrate to one.
///
/// Returns `None` for a vector of zero mass.
pub fn density_from_vector(v: &DVector<f64>) -> Option<DVector<f64>> {
    let mass: f64 = v.iter().sum();
    if mass == 0.0 || !mass.is_finite() {
        return None;
    }
    // bin width is 1/len, so the integral is mass/len
    Some(v * (v.len() as f64 / mass))
}

/// Repeats every bin value `factor` times (piecewise-constant refinement).
pub fn refine_piecewise_constant(v: &DVector<f64>, factor: usize) -> DVector<f64> {
    DVector::from_iterator(v.len() * factor, v.iter().flat_map(|&x| std::iter::repeat_n(x, factor)))
}
