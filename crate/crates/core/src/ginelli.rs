//! Ginelli's algorithm for covariant Lyapunov vectors.
//!
//! Given `k` vectors `x_1, …, x_k` at `σ^{-n1} ω` and an invertible upper
//! triangular `k × k` matrix, the algorithm
//!
//! 1. pushes the vectors forward to `ω`; their span is `W¹`,
//! 2. keeps pushing to `σ^{n2} ω`,
//! 3. orthonormalizes there (`x³ = Q`, with the triangular factor `R`),
//! 4. forms `y¹_j = Σ_i r_ij x³_i` from the supplied triangular matrix,
//! 5. pulls `y¹` back to `ω` through the inverse of the cocycle restricted to `W¹`,
//! 6. normalizes.
//!
//! The forward pass re-orthonormalizes every `qr_stride` steps and stores the
//! orthonormal bases `Q_t` and transition factors `R_t` at each checkpoint, so
//! that `L^{(steps)} Q_t = Q_{t+1} R_{t+1}`. Because `W¹` and every later span
//! are carried by these bases, step 5 reduces to back substitutions with the
//! stored `R_t` on `k × k` coefficient matrices; columns are renormalized after
//! every solve to keep the entries bounded.

use std::ops::Range;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::cocycle::{CocycleError, CocycleOrbit};
use crate::grassmann::{orthonormalize, GrassmannError, Subspace, DEFAULT_RANK_TOL};
use crate::linalg::solve_upper_triangular;
use crate::rng::{gaussian_matrix, stream_rng};

#[derive(Debug, Error)]
pub enum GinelliError {
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error("forward vectors collapsed at index {index} (column {column_index})")]
    RankDeficient { index: i64, column_index: usize },
    #[error("initial triangular matrix has a zero diagonal entry")]
    SingularRInit,
    #[error("initial triangular matrix has non-zero entries below the diagonal")]
    NotUpperTriangular,
    #[error("triangular factor at checkpoint index {checkpoint} is singular")]
    SingularR { checkpoint: i64 },
    #[error("output column {column} vanished")]
    ZeroColumn { column: usize },
    #[error(transparent)]
    Cocycle(#[from] CocycleError),
    #[error(transparent)]
    Grassmann(#[from] GrassmannError),
}

impl GinelliError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::BadConfig(_) => "ginelli::BadConfig",
            Self::RankDeficient { .. } => "ginelli::RankDeficient",
            Self::SingularRInit => "ginelli::SingularRInit",
            Self::NotUpperTriangular => "ginelli::NotUpperTriangular",
            Self::SingularR { .. } => "ginelli::SingularR",
            Self::ZeroColumn { .. } => "ginelli::ZeroColumn",
            Self::Cocycle(e) => e.name(),
            Self::Grassmann(e) => e.name(),
        }
    }
}

/// Parameters of one Ginelli run centred at `center`.
#[derive(Debug, Clone, PartialEq)]
pub struct GinelliConfig {
    /// Number of vectors.
    pub k: usize,
    /// Past steps, `≥ 1`.
    pub n1: usize,
    /// Future steps; `0` skips the backward pass.
    pub n2: usize,
    /// Re-orthonormalize after this many generator applications.
    pub qr_stride: usize,
    /// Seed for [`GinelliInputs::sample`].
    pub seed: u64,
    /// Relative rank tolerance for every orthonormalization.
    pub rank_tol: f64,
    /// Orbit index of `ω`.
    pub center: i64,
    /// Output grouping; `None` means `k` blocks of size one.
    pub multiplicities: Option<Vec<usize>>,
}

impl GinelliConfig {
    pub fn new(k: usize, n1: usize, n2: usize) -> Self {
        Self {
            k,
            n1,
            n2,
            qr_stride: 1,
            seed: 0,
            rank_tol: DEFAULT_RANK_TOL,
            center: 0,
            multiplicities: None,
        }
    }

    /// Orbit window the run reads.
    pub fn window(&self) -> Range<i64> {
        self.center - self.n1 as i64..self.center + self.n2 as i64
    }

    pub fn validate(&self, orbit: &CocycleOrbit) -> Result<(), GinelliError> {
        let d = orbit.ambient_dim();
        if self.k == 0 || self.k > d {
            return Err(GinelliError::BadConfig(format!("k must be in 1..={d}, got {}", self.k)));
        }
        if self.n1 == 0 {
            return Err(GinelliError::BadConfig("n1 must be at least 1".into()));
        }
        if self.qr_stride == 0 {
            return Err(GinelliError::BadConfig("qr_stride must be at least 1".into()));
        }
        if !(self.rank_tol >= 0.0 && self.rank_tol < 1.0) {
            return Err(GinelliError::BadConfig(format!("rank_tol must be in [0, 1), got {}", self.rank_tol)));
        }
        if let Some(m) = &self.multiplicities {
            check_multiplicities(m, self.k)?;
        }
        let w = self.window();
        orbit.check_window(w.start, (w.end - w.start) as usize)?;
        Ok(())
    }

    fn blocks(&self) -> Vec<usize> {
        self.multiplicities.clone().unwrap_or_else(|| vec![1; self.k])
    }
}

fn check_multiplicities(m: &[usize], k: usize) -> Result<(), GinelliError> {
    if m.contains(&0) || m.iter().sum::<usize>() != k {
        return Err(GinelliError::BadConfig(format!(
            "multiplicities {m:?} must be positive and sum to k = {k}"
        )));
    }
    Ok(())
}

/// Initial vectors and initial triangular matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GinelliInputs {
    pub vectors: DMatrix<f64>,
    pub r_init: DMatrix<f64>,
}

impl GinelliInputs {
    /// Gaussian vectors and `R = I + (strictly upper Gaussian)`.
    ///
    /// Entries are drawn column by column, so the inputs for `k` are the
    /// leading block of the inputs for `k + 1` with the same seed.
    pub fn sample(ambient_dim: usize, k: usize, seed: u64) -> Self {
        let vectors = gaussian_matrix(&mut stream_rng(seed, 1), ambient_dim, k);
        let mut rng = stream_rng(seed, 2);
        let mut r_init = DMatrix::identity(k, k);
        for j in 1..k {
            let col = gaussian_matrix(&mut rng, j, 1);
            for i in 0..j {
                r_init[(i, j)] = col[(i, 0)];
            }
        }
        Self { vectors, r_init }
    }

    /// The first `k` vectors and the leading `k × k` block of `r_init`.
    pub fn truncate(&self, k: usize) -> Self {
        Self {
            vectors: self.vectors.columns(0, k).into_owned(),
            r_init: self.r_init.view((0, 0), (k, k)).into_owned(),
        }
    }
}

/// Forward-pass record.
#[derive(Debug, Clone)]
pub struct GinelliRun {
    checkpoints: Vec<i64>,
    q_history: Vec<DMatrix<f64>>,
    r_history: Vec<DMatrix<f64>>,
    steps: Vec<usize>,
    initial_r: DMatrix<f64>,
    center_position: usize,
    qr_stride: usize,
}

impl GinelliRun {
    /// Orbit indices of the checkpoints, ascending from `center - n1` to `center + n2`.
    pub fn checkpoints(&self) -> &[i64] {
        &self.checkpoints
    }

    /// Orthonormal basis at each checkpoint.
    pub fn q_history(&self) -> &[DMatrix<f64>] {
        &self.q_history
    }

    /// `r_history()[i]` maps checkpoint `i` to `i + 1`: `L Q_i = Q_{i+1} R`.
    pub fn r_history(&self) -> &[DMatrix<f64>] {
        &self.r_history
    }

    /// Generator applications in each transition.
    pub fn steps(&self) -> &[usize] {
        &self.steps
    }

    /// Triangular factor of the initial vectors: `x = Q_0 R`.
    pub fn initial_r(&self) -> &DMatrix<f64> {
        &self.initial_r
    }

    pub fn qr_stride(&self) -> usize {
        self.qr_stride
    }

    pub fn k(&self) -> usize {
        self.initial_r.nrows()
    }

    pub fn center(&self) -> i64 {
        self.checkpoints[self.center_position]
    }

    /// Basis of `W¹`, the span of the pushed-forward vectors at `ω`.
    pub fn q_center(&self) -> &DMatrix<f64> {
        &self.q_history[self.center_position]
    }

    /// Span of the first `len` pushed-forward vectors at `ω`.
    pub fn forward_span(&self, len: usize) -> Subspace {
        Subspace::from_basis_unchecked(self.q_center().columns(0, len).into_owned())
    }

    /// Total generator applications recorded.
    pub fn total_steps(&self) -> usize {
        self.steps.iter().sum()
    }
}

/// Coefficients of `y²` in the basis `Q` at `ω`, with the log of the
/// accumulated column scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct BackwardCoefficients {
    pub coeffs: DMatrix<f64>,
    pub log_scales: Vec<f64>,
}

/// Output vectors and their multiplicity blocks.
#[derive(Debug, Clone)]
pub struct CLVResult {
    /// `d × k`, unit columns.
    pub vectors: DMatrix<f64>,
    /// Column ranges of the blocks, in order.
    pub blocks: Vec<Range<usize>>,
    pub block_spans: Vec<Subspace>,
}

/// Steps 1–3: forward pass with periodic re-orthonormalization.
pub fn forward_stage(
    orbit: &CocycleOrbit,
    cfg: &GinelliConfig,
    init_vectors: &DMatrix<f64>,
) -> Result<GinelliRun, GinelliError> {
    cfg.validate(orbit)?;
    if init_vectors.shape() != (orbit.ambient_dim(), cfg.k) {
        return Err(GinelliError::BadConfig(format!(
            "initial vectors are {}x{}, expected {}x{}",
            init_vectors.nrows(),
            init_vectors.ncols(),
            orbit.ambient_dim(),
            cfg.k
        )));
    }
    let window = cfg.window();
    let rank_err = |index: i64| {
        move |e: GrassmannError| match e {
            GrassmannError::RankDeficient { column_index } => GinelliError::RankDeficient { index, column_index },
            other => GinelliError::Grassmann(other),
        }
    };
    let (q0, initial_r) = orthonormalize(init_vectors, cfg.rank_tol).map_err(rank_err(window.start))?;

    let transitions = (cfg.n1 + cfg.n2).div_ceil(cfg.qr_stride) + 2;
    let mut run = GinelliRun {
        checkpoints: Vec::with_capacity(transitions),
        q_history: Vec::with_capacity(transitions),
        r_history: Vec::with_capacity(transitions),
        steps: Vec::with_capacity(transitions),
        initial_r,
        center_position: 0,
        qr_stride: cfg.qr_stride,
    };
    run.checkpoints.push(window.start);
    run.q_history.push(q0.into_basis());

    let mut current = run.q_history[0].clone();
    let mut pending = 0usize;
    for n in window.clone() {
        current = orbit.generator_at(n)? * current;
        pending += 1;
        let position = n + 1;
        let on_stride = ((position - window.start) as usize).is_multiple_of(cfg.qr_stride);
        if on_stride || position == cfg.center || position == window.end {
            let (q, r) = orthonormalize(&current, cfg.rank_tol).map_err(rank_err(position))?;
            if position == cfg.center {
                run.center_position = run.checkpoints.len();
            }
            run.checkpoints.push(position);
            run.r_history.push(r);
            run.steps.push(pending);
            current = q.into_basis();
            run.q_history.push(current.clone());
            pending = 0;
        }
    }
    Ok(run)
}

/// Steps 4–5: back substitution from `σ^{n2} ω` to `ω` in coefficient space.
pub fn backward_stage(run: &GinelliRun, r_init: &DMatrix<f64>) -> Result<BackwardCoefficients, GinelliError> {
    let k = run.k();
    if r_init.shape() != (k, k) {
        return Err(GinelliError::BadConfig(format!(
            "r_init is {}x{}, expected {k}x{k}",
            r_init.nrows(),
            r_init.ncols()
        )));
    }
    if (0..k).any(|j| (j + 1..k).any(|i| r_init[(i, j)] != 0.0)) {
        return Err(GinelliError::NotUpperTriangular);
    }
    if (0..k).any(|i| r_init[(i, i)] == 0.0 || !r_init[(i, i)].is_finite()) {
        return Err(GinelliError::SingularRInit);
    }
    let mut coeffs = r_init.clone();
    let mut log_scales = vec![0.0; k];
    normalize_columns(&mut coeffs, &mut log_scales);
    for t in (run.center_position..run.r_history.len()).rev() {
        let r = &run.r_history[t];
        let checkpoint = run.checkpoints[t + 1];
        coeffs = solve_upper_triangular(r, &coeffs).ok_or(GinelliError::SingularR { checkpoint })?;
        for j in 0..k {
            for i in j + 1..k {
                coeffs[(i, j)] = 0.0;
            }
        }
        if !normalize_columns(&mut coeffs, &mut log_scales) {
            return Err(GinelliError::SingularR { checkpoint });
        }
    }
    Ok(BackwardCoefficients { coeffs, log_scales })
}

fn normalize_columns(m: &mut DMatrix<f64>, log_scales: &mut [f64]) -> bool {
    for (j, mut col) in m.column_iter_mut().enumerate() {
        let n = col.norm();
        if !(n > 0.0) || !n.is_finite() {
            return false;
        }
        col /= n;
        log_scales[j] += n.ln();
    }
    true
}

/// Step 6: vectors at `ω`, normalized and grouped by multiplicity.
pub fn finalize(
    run: &GinelliRun,
    coeffs: &DMatrix<f64>,
    multiplicities: &[usize],
    rank_tol: f64,
) -> Result<CLVResult, GinelliError> {
    let k = run.k();
    check_multiplicities(multiplicities, k)?;
    if coeffs.shape() != (k, k) {
        return Err(GinelliError::BadConfig(format!("coefficients must be {k}x{k}")));
    }
    let mut vectors = run.q_center() * coeffs;
    for (column, mut col) in vectors.column_iter_mut().enumerate() {
        let n = col.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(GinelliError::ZeroColumn { column });
        }
        col /= n;
    }
    let mut blocks = Vec::with_capacity(multiplicities.len());
    let mut block_spans = Vec::with_capacity(multiplicities.len());
    let mut start = 0;
    for &m in multiplicities {
        let range = start..start + m;
        let cols = vectors.columns(start, m).into_owned();
        let (span, _) = orthonormalize(&cols, rank_tol).map_err(|e| match e {
            GrassmannError::RankDeficient { column_index } => GinelliError::RankDeficient {
                index: run.center(),
                column_index: start + column_index,
            },
            other => GinelliError::Grassmann(other),
        })?;
        block_spans.push(span);
        blocks.push(range);
        start += m;
    }
    Ok(CLVResult {
        vectors,
        blocks,
        block_spans,
    })
}

/// All six steps.
pub fn run(
    orbit: &CocycleOrbit,
    cfg: &GinelliConfig,
    inputs: &GinelliInputs,
) -> Result<(CLVResult, GinelliRun), GinelliError> {
    let record = forward_stage(orbit, cfg, &inputs.vectors)?;
    let back = backward_stage(&record, &inputs.r_init)?;
    let result = finalize(&record, &back.coeffs, &cfg.blocks(), cfg.rank_tol)?;
    Ok((result, record))
}

/// [`run`] with inputs drawn by [`GinelliInputs::sample`] from `cfg.seed`.
pub fn run_sampled(orbit: &CocycleOrbit, cfg: &GinelliConfig) -> Result<(CLVResult, GinelliRun), GinelliError> {
    let inputs = GinelliInputs::sample(orbit.ambient_dim(), cfg.k, cfg.seed);
    run(orbit, cfg, &inputs)
}
