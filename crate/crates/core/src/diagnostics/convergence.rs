//! Distance to the exact splitting as a function of run length.
//!
//! For each `N` in the grid and each seed, Ginelli's algorithm runs on a
//! conjugated-diagonal cocycle with `n1 = a·N`, `n2 = b·N` (the ray `(a, b)`),
//! and every computed block span at index 0 is compared with the exact
//! Oseledets space. Per-block medians over seeds are fitted against `N`; the
//! fitted rate must not exceed `−gap + slack`.
//!
//! The forward variant compares the span of the first `m_1 + … + m_j` pushed
//! vectors with `Y_1 ⊕ … ⊕ Y_j`, which converges at rate `λ_j − λ_{j+1}`.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::{fit_rate, DiagnosticsError, DISTANCE_FLOOR};
use crate::cocycle::{make_conjugated_diagonal, ConjugatedDiagonalSpec};
use crate::ginelli::{forward_stage, run, GinelliConfig, GinelliInputs};
use crate::grassmann::{grassmann_distance, DEFAULT_RANK_TOL};
use crate::oracle::OracleSplitting;
use crate::TOOL_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvergenceKind {
    /// Block spans after the backward pass against `Y_j`.
    Clv,
    /// Forward spans against `Y_1 ⊕ … ⊕ Y_j`.
    Forward,
}

impl ConvergenceKind {
    fn label(self) -> &'static str {
        match self {
            Self::Clv => "convergence",
            Self::Forward => "forward-convergence",
        }
    }
}

/// Run lengths as multiples of `N`: `n1 = past·N`, `n2 = future·N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Ray {
    pub past: usize,
    pub future: usize,
}

impl Ray {
    pub const DIAGONAL: Ray = Ray { past: 1, future: 1 };
    pub const LONG_PAST: Ray = Ray { past: 2, future: 1 };
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Strictly increasing, positive.
    pub grid: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Slack as a fraction of each block's gap.
    pub slack_fraction: f64,
    pub kind: ConvergenceKind,
    pub ray: Ray,
    pub qr_stride: usize,
    pub rank_tol: f64,
}

impl ExperimentConfig {
    pub fn new(grid: Vec<usize>, seeds: Vec<u64>) -> Self {
        Self {
            grid,
            seeds,
            slack_fraction: 0.15,
            kind: ConvergenceKind::Clv,
            ray: Ray::DIAGONAL,
            qr_stride: 1,
            rank_tol: DEFAULT_RANK_TOL,
        }
    }

    pub fn validate(&self) -> Result<(), DiagnosticsError> {
        if self.grid.is_empty() || self.grid[0] == 0 || self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DiagnosticsError::BadConfig(format!(
                "grid must be positive and strictly increasing, got {:?}",
                self.grid
            )));
        }
        if self.seeds.is_empty() {
            return Err(DiagnosticsError::BadConfig("at least one seed is required".into()));
        }
        if !(self.slack_fraction >= 0.0 && self.slack_fraction < 1.0) {
            return Err(DiagnosticsError::BadConfig(format!(
                "slack fraction must be in [0, 1), got {}",
                self.slack_fraction
            )));
        }
        if self.ray.past == 0 || (self.kind == ConvergenceKind::Clv && self.ray.future == 0) {
            return Err(DiagnosticsError::BadConfig("ray multipliers must be positive".into()));
        }
        if self.qr_stride == 0 {
            return Err(DiagnosticsError::BadConfig("qr_stride must be positive".into()));
        }
        Ok(())
    }

    fn lengths(&self, n: usize) -> (usize, usize) {
        match self.kind {
            ConvergenceKind::Clv => (self.ray.past * n, self.ray.future * n),
            ConvergenceKind::Forward => (self.ray.past * n, 0),
        }
    }
}

/// One `(N, seed)` cell: a distance per block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellRecord {
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
    pub distances: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockReport {
    /// 1-based block index.
    pub block: usize,
    pub dim: usize,
    /// `(N, median distance over seeds)` for every grid point.
    pub distances: Vec<(usize, f64)>,
    /// `None` when no fit was possible (see `trivial`).
    pub fitted_rate: Option<f64>,
    /// `None` for an infinite gap.
    pub theoretical_gap: Option<f64>,
    pub slack: Option<f64>,
    pub pass: bool,
    /// Every median distance is at or below the rounding floor.
    pub trivial: bool,
    pub points_used: usize,
    pub dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub experiment: &'static str,
    pub spec: ConjugatedDiagonalSpec,
    pub grid: Vec<usize>,
    pub ray: Ray,
    pub slack_fraction: f64,
    pub blocks: Vec<BlockReport>,
    pub pass: bool,
    pub seeds: Vec<u64>,
    pub tool_version: &'static str,
    #[serde(skip)]
    pub cells: Vec<CellRecord>,
}

impl ConvergenceReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// One row per `(N, block, seed)`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,block,distance,seed\n");
        for cell in &self.cells {
            for (j, d) in cell.distances.iter().enumerate() {
                writeln!(out, "{},{},{:e},{}", cell.n, j + 1, d, cell.seed).expect("writing to a String");
            }
        }
        out
    }

    pub fn write(&self, json: &Path, csv: Option<&Path>) -> io::Result<()> {
        std::fs::write(json, self.to_json())?;
        if let Some(csv) = csv {
            std::fs::write(csv, self.to_csv())?;
        }
        Ok(())
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Gap governing block `j` of the forward variant: `λ_j − λ_{j+1}`.
fn forward_gaps(exponents: &[f64]) -> Vec<Option<f64>> {
    (0..exponents.len()).map(|j| exponents.get(j + 1).map(|next| exponents[j] - next)).collect()
}

fn run_cell(
    spec: &ConjugatedDiagonalSpec,
    oracle: &OracleSplitting,
    cfg: &ExperimentConfig,
    n: usize,
    seed: u64,
) -> Result<CellRecord, DiagnosticsError> {
    let (n1, n2) = cfg.lengths(n);
    let (orbit, _) = make_conjugated_diagonal(spec, -(n1 as i64)..n2.max(1) as i64)?;
    let mults = oracle.multiplicities();
    let k = oracle.finite_dim();
    let gcfg = GinelliConfig {
        qr_stride: cfg.qr_stride,
        seed,
        rank_tol: cfg.rank_tol,
        multiplicities: Some(mults.clone()),
        ..GinelliConfig::new(k, n1, n2)
    };
    let inputs = GinelliInputs::sample(spec.ambient_dim(), k, seed);
    let distances = match cfg.kind {
        ConvergenceKind::Clv => {
            let (result, _) = run(&orbit, &gcfg, &inputs)?;
            let exact = oracle.spaces_at(0);
            result
                .block_spans
                .iter()
                .zip(&exact)
                .map(|(a, b)| grassmann_distance(a, b))
                .collect::<Result<Vec<_>, _>>()?
        }
        ConvergenceKind::Forward => {
            let record = forward_stage(&orbit, &gcfg, &inputs.vectors)?;
            let mut len = 0;
            let mut out = Vec::with_capacity(mults.len());
            for (j, m) in mults.iter().enumerate() {
                len += m;
                out.push(grassmann_distance(&record.forward_span(len), &oracle.sum_at(0, j + 1))?);
            }
            out
        }
    };
    Ok(CellRecord { n, seed, distances })
}

fn block_report(
    block: usize,
    dim: usize,
    distances: Vec<(usize, f64)>,
    gap: Option<f64>,
    slack_fraction: f64,
) -> Result<BlockReport, DiagnosticsError> {
    let trivial = distances.iter().all(|&(_, d)| d <= DISTANCE_FLOOR);
    let slack = gap.map(|g| slack_fraction * g);
    let points: Vec<(f64, f64)> = distances.iter().map(|&(n, d)| (n as f64, d)).collect();
    let last_at_floor = distances.last().is_some_and(|&(_, d)| d <= DISTANCE_FLOOR);
    let (fitted_rate, points_used, dropped, pass) = if trivial {
        (None, 0, distances.len(), true)
    } else {
        match fit_rate(&points) {
            Ok(fit) => {
                let pass = match (gap, slack) {
                    (Some(g), Some(s)) => fit.rate <= -g + s,
                    // an infinite gap demands the floor
                    _ => last_at_floor,
                };
                (Some(fit.rate), fit.points_used, fit.dropped, pass)
            }
            // too few points above the floor: the distance collapsed faster than the grid resolves
            Err(DiagnosticsError::InsufficientData { usable }) => (None, 0, distances.len() - usable, last_at_floor),
            Err(e) => return Err(e),
        }
    };
    Ok(BlockReport {
        block,
        dim,
        distances,
        fitted_rate,
        theoretical_gap: gap,
        slack,
        pass,
        trivial,
        points_used,
        dropped,
    })
}

/// Runs every `(N, seed)` cell in parallel and aggregates per block.
///
/// Cell results are collected in grid-then-seed order, so the report does not
/// depend on the number of threads.
pub fn convergence_experiment(
    spec: &ConjugatedDiagonalSpec,
    cfg: &ExperimentConfig,
) -> Result<ConvergenceReport, DiagnosticsError> {
    cfg.validate()?;
    let oracle = OracleSplitting::new(spec.clone())?;
    if oracle.finite_dim() == 0 {
        return Err(DiagnosticsError::BadConfig("spec has no finite exponent".into()));
    }
    let jobs: Vec<(usize, u64)> =
        cfg.grid.iter().flat_map(|&n| cfg.seeds.iter().map(move |&s| (n, s))).collect();
    let cells: Vec<CellRecord> = jobs
        .par_iter()
        .map(|&(n, seed)| run_cell(spec, &oracle, cfg, n, seed))
        .collect::<Result<_, _>>()?;

    let mults = oracle.multiplicities();
    let gaps = match cfg.kind {
        ConvergenceKind::Clv => spec.gaps(),
        ConvergenceKind::Forward => forward_gaps(&oracle.exponents()),
    };
    let mut dims = mults.clone();
    if cfg.kind == ConvergenceKind::Forward {
        let mut acc = 0;
        for d in dims.iter_mut() {
            acc += *d;
            *d = acc;
        }
    }
    let per_n = cfg.seeds.len();
    let mut blocks = Vec::with_capacity(mults.len());
    for j in 0..mults.len() {
        let distances: Vec<(usize, f64)> = cells
            .chunks(per_n)
            .map(|chunk| {
                let mut values: Vec<f64> = chunk.iter().map(|c| c.distances[j]).collect();
                (chunk[0].n, median(&mut values))
            })
            .collect();
        blocks.push(block_report(j + 1, dims[j], distances, gaps[j], cfg.slack_fraction)?);
    }
    Ok(ConvergenceReport {
        experiment: cfg.kind.label(),
        spec: spec.clone(),
        grid: cfg.grid.clone(),
        ray: cfg.ray,
        slack_fraction: cfg.slack_fraction,
        pass: blocks.iter().all(|b| b.pass),
        blocks,
        seeds: cfg.seeds.clone(),
        tool_version: TOOL_VERSION,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(rates: &[f64]) -> ConjugatedDiagonalSpec {
        ConjugatedDiagonalSpec::new(rates.to_vec(), 4.0, 11).unwrap()
    }

    #[test]
    fn three_simple_exponents_converge_at_the_gap() {
        let s = spec(&[4f64.ln(), 2f64.ln(), 0.0]);
        let report = convergence_experiment(&s, &ExperimentConfig::new((6..=40).step_by(2).collect(), vec![1, 2, 3])).unwrap();
        for b in &report.blocks {
            assert!((b.theoretical_gap.unwrap() - 2f64.ln()).abs() < 1e-15);
            assert!(b.pass, "{b:?}");
        }
        assert!(report.pass);
        assert_eq!(report.cells.len(), 18 * 3);
    }

    #[test]
    fn full_space_block_is_trivial() {
        let s = spec(&[0.3, 0.3, 0.3]);
        let report = convergence_experiment(&s, &ExperimentConfig::new(vec![5, 10, 15, 20], vec![0])).unwrap();
        assert_eq!(report.blocks.len(), 1);
        let b = &report.blocks[0];
        assert!(b.trivial && b.pass && b.fitted_rate.is_none() && b.theoretical_gap.is_none());
    }

    #[test]
    fn forward_spans_converge_at_the_lower_gap() {
        let s = spec(&[1.0, 0.4, -0.6]);
        let mut cfg = ExperimentConfig::new((4..=40).step_by(4).collect(), vec![5, 6, 7]);
        cfg.kind = ConvergenceKind::Forward;
        let report = convergence_experiment(&s, &cfg).unwrap();
        assert_eq!(report.experiment, "forward-convergence");
        let gaps: Vec<_> = report.blocks.iter().map(|b| b.theoretical_gap).collect();
        assert!((gaps[0].unwrap() - 0.6).abs() < 1e-15 && (gaps[1].unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(gaps[2], None);
        assert!(report.blocks[2].trivial);
        assert!(report.pass, "{:#?}", report.blocks);
    }

    #[test]
    fn bad_grids_are_rejected() {
        let s = spec(&[1.0, 0.0]);
        for grid in [vec![], vec![0, 1], vec![3, 3], vec![5, 4]] {
            let r = convergence_experiment(&s, &ExperimentConfig::new(grid, vec![1]));
            assert!(matches!(r, Err(DiagnosticsError::BadConfig(_))));
        }
    }

    #[test]
    fn csv_lists_every_cell() {
        let s = spec(&[1.0, 0.0]);
        let report = convergence_experiment(&s, &ExperimentConfig::new(vec![2, 4, 6, 8], vec![1, 2])).unwrap();
        let csv = report.to_csv();
        assert!(csv.starts_with("N,block,distance,seed\n"));
        assert_eq!(csv.lines().count(), 1 + 4 * 2 * 2);
        let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        for key in ["experiment", "spec", "grid", "blocks", "seeds", "tool_version"] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }
}
