//! Conjugated-diagonal cocycles `L(σ^n ω) = T(n+1) · D · T(n)^{-1}`.
//!
//! With `D = diag(e^{μ_1}, …, e^{μ_d})` the Oseledets spaces at index `n` are
//! exactly `T(n)` applied to the coordinate blocks of equal rates, so these
//! orbits come with closed-form ground truth. A rate of `-inf` puts a zero on
//! the diagonal of `D`; those coordinates form the kernel-carrying tail.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{CocycleError, CocycleOrbit};
use crate::grassmann::orthonormalize;
use crate::oracle::OracleSplitting;
use crate::rng::{gaussian_matrix, index_rng};

/// Parameters of a conjugated-diagonal cocycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugatedDiagonalSpec {
    /// Log growth rates `μ_1 ≥ … ≥ μ_d`, repeated per multiplicity; `-inf` allowed.
    #[serde(with = "rates_serde")]
    pub rates: Vec<f64>,
    /// Upper bound on the condition number of every conjugator `T(n)`.
    pub conditioning: f64,
    pub seed: u64,
}

impl ConjugatedDiagonalSpec {
    pub fn new(rates: Vec<f64>, conditioning: f64, seed: u64) -> Result<Self, CocycleError> {
        let spec = Self {
            rates,
            conditioning,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), CocycleError> {
        if self.rates.is_empty() {
            return Err(CocycleError::BadSpec("rates must not be empty".into()));
        }
        if self.rates.iter().any(|r| r.is_nan() || *r == f64::INFINITY) {
            return Err(CocycleError::BadSpec("rates must be finite or -inf".into()));
        }
        if self.rates.windows(2).any(|w| w[1] > w[0]) {
            return Err(CocycleError::BadSpec("rates must be sorted non-increasing".into()));
        }
        if !self.rates[0].is_finite() {
            return Err(CocycleError::BadSpec("at least one rate must be finite".into()));
        }
        if !(self.conditioning >= 1.0) || !self.conditioning.is_finite() {
            return Err(CocycleError::BadSpec(format!(
                "conditioning must be a finite number >= 1, got {}",
                self.conditioning
            )));
        }
        Ok(())
    }

    pub fn ambient_dim(&self) -> usize {
        self.rates.len()
    }

    /// Distinct finite rates with the coordinate ranges they occupy.
    pub fn groups(&self) -> Vec<(f64, Range<usize>)> {
        let mut out: Vec<(f64, Range<usize>)> = Vec::new();
        for (i, &r) in self.rates.iter().enumerate() {
            if !r.is_finite() {
                break;
            }
            match out.last_mut() {
                Some((rate, range)) if *rate == r => range.end = i + 1,
                _ => out.push((r, i..i + 1)),
            }
        }
        out
    }

    /// Coordinates carrying a `-inf` rate.
    pub fn tail(&self) -> Range<usize> {
        let finite = self.rates.iter().take_while(|r| r.is_finite()).count();
        finite..self.rates.len()
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.groups().into_iter().map(|(_, r)| r.len()).collect()
    }

    /// `min(|λ_j − λ_{j−1}|, |λ_j − λ_{j+1}|)` per block, `None` for an infinite gap.
    ///
    /// `λ_0 = +∞`; the neighbour below the last finite exponent is `-∞` when
    /// there is no tail, or the tail itself (also `-∞`).
    pub fn gaps(&self) -> Vec<Option<f64>> {
        let exps: Vec<f64> = self.groups().into_iter().map(|(r, _)| r).collect();
        (0..exps.len())
            .map(|j| {
                let above = if j == 0 { None } else { Some(exps[j - 1] - exps[j]) };
                let below = exps.get(j + 1).map(|next| exps[j] - next);
                match (above, below) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    (Some(a), None) | (None, Some(a)) => Some(a),
                    (None, None) => None,
                }
            })
            .collect()
    }

    pub fn diagonal(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.rates.len(),
            self.rates.iter().map(|r| r.exp()),
        ))
    }
}

/// `T(n) = (1 − α) I + α Q(n)` with `Q(n)` Haar orthogonal and `α = (1 − 1/c)/2`.
///
/// `T(n)` is normal with singular values `|1 − α + α e^{iθ}| ∈ [1/c, 1]`, so
/// its condition number is at most `c`. For `c = 1` it is the identity.
pub fn conjugator(spec: &ConjugatedDiagonalSpec, index: i64) -> DMatrix<f64> {
    let d = spec.ambient_dim();
    let identity = DMatrix::identity(d, d);
    if spec.conditioning == 1.0 {
        return identity;
    }
    let alpha = 0.5 * (1.0 - 1.0 / spec.conditioning);
    let mut rng = index_rng(spec.seed, index);
    let q = loop {
        if let Ok((q, _)) = orthonormalize(&gaussian_matrix(&mut rng, d, d), 1e-10) {
            break q.into_basis();
        }
    };
    identity * (1.0 - alpha) + q * alpha
}

/// Builds the orbit on `range` together with its exact Oseledets data.
pub fn make_conjugated_diagonal(
    spec: &ConjugatedDiagonalSpec,
    range: Range<i64>,
) -> Result<(CocycleOrbit, OracleSplitting), CocycleError> {
    spec.validate()?;
    if range.end <= range.start {
        return Err(CocycleError::ShapeMismatch("empty orbit window".into()));
    }
    let d = spec.diagonal();
    let ts: Vec<DMatrix<f64>> = (range.start..=range.end).map(|n| conjugator(spec, n)).collect();
    let mut generators = Vec::with_capacity(ts.len() - 1);
    for (offset, pair) in ts.windows(2).enumerate() {
        let inverse = pair[0].clone().try_inverse().ok_or_else(|| {
            CocycleError::BadSpec(format!("conjugator at {} is singular", range.start + offset as i64))
        })?;
        generators.push(&pair[1] * &d * inverse);
    }
    let orbit = CocycleOrbit::new(range.start, generators)?;
    Ok((orbit, OracleSplitting::new(spec.clone())?))
}

mod rates_serde {
    //! Rates serialize as JSON numbers, with `-inf` written as the string `"-inf"`.
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Rate {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(rates: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let out: Vec<Rate> = rates
            .iter()
            .map(|&r| {
                if r == f64::NEG_INFINITY {
                    Rate::Text("-inf".into())
                } else {
                    Rate::Num(r)
                }
            })
            .collect();
        out.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Rate>::deserialize(d)?
            .into_iter()
            .map(|r| match r {
                Rate::Num(x) => Ok(x),
                Rate::Text(t) if t == "-inf" => Ok(f64::NEG_INFINITY),
                Rate::Text(t) => Err(D::Error::custom(format!("invalid rate {t:?}"))),
            })
            .collect()
    }
}
