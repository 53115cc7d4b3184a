use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clvkit::cocycle::{
    density_from_vector, make_conjugated_diagonal, make_ulam_transfer, read_orbit_dir, write_orbit_dir,
};
use clvkit::diagnostics::{
    convergence_experiment, l1_distance_to_uniform, lemma_sweep, lyapunov_from_r, truncation_distance,
    ConvergenceKind, ExperimentConfig, LemmaId, Ray, SweepSummary,
};
use clvkit::ginelli::{run, GinelliConfig, GinelliInputs};
use clvkit::grassmann::grassmann_distance;
use clvkit::rng::derive_seed;
use clvkit::{CocycleOrbit, ConjugatedDiagonalSpec, OracleSplitting, UlamTransferSpec, TOOL_VERSION};
use serde::Serialize;

use crate::error::CliError;
use crate::settings::*;

const DEFAULT_CONDITIONING: f64 = 4.0;

fn root_seed(s: &Settings) -> Result<u64, CliError> {
    s.or(&SEED, 0)
}

fn sub_seed(s: &Settings, key: &Key, tag: &str) -> Result<u64, CliError> {
    match s.parsed(key)? {
        Some(seed) => Ok(seed),
        None => Ok(derive_seed(root_seed(s)?, tag)),
    }
}

fn conjdiag_spec(s: &Settings) -> Result<ConjugatedDiagonalSpec, CliError> {
    let rates = parse_rates(s.required(&ORBIT_RATES)?)?;
    let conditioning = s.or(&ORBIT_CONDITIONING, DEFAULT_CONDITIONING)?;
    Ok(ConjugatedDiagonalSpec::new(rates, conditioning, sub_seed(s, &ORBIT_SEED, "orbit")?)?)
}

fn ulam_spec(s: &Settings, bins: usize) -> Result<UlamTransferSpec, CliError> {
    let expansion = s.or(&EXPANSION, 2u32)?;
    let eps = s.or(&EPS, 0.05)?;
    Ok(UlamTransferSpec::new(bins, expansion, eps, sub_seed(s, &ORBIT_SEED, "orbit")?)?)
}

fn single_bins(s: &Settings) -> Result<usize, CliError> {
    match s.list::<usize>(&BINS)?.as_deref() {
        None => Ok(64),
        Some([b]) => Ok(*b),
        Some(other) => Err(CliError::Config(format!("ulam.bins: expected one bin count here, got {other:?}"))),
    }
}

/// Where the generators come from.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum Source {
    Conjdiag { spec: ConjugatedDiagonalSpec },
    Ulam { spec: UlamTransferSpec },
    OrbitDir { path: String },
}

fn synthetic_source(s: &Settings) -> Result<Source, CliError> {
    match s.required(&ORBIT_SPEC)? {
        "conjdiag" => Ok(Source::Conjdiag { spec: conjdiag_spec(s)? }),
        "ulam" => Ok(Source::Ulam {
            spec: ulam_spec(s, single_bins(s)?)?,
        }),
        other => Err(CliError::Config(format!("orbit.spec: unknown family {other:?} (expected conjdiag or ulam)"))),
    }
}

fn source(s: &Settings) -> Result<Source, CliError> {
    match (s.has(&ORBIT_DIR), s.has(&ORBIT_SPEC)) {
        (true, true) => Err(CliError::Config("orbit.dir and orbit.spec are mutually exclusive".into())),
        (true, false) => Ok(Source::OrbitDir {
            path: s.required(&ORBIT_DIR)?.to_string(),
        }),
        (false, _) => synthetic_source(s),
    }
}

fn build_orbit(source: &Source, window: std::ops::Range<i64>) -> Result<CocycleOrbit, CliError> {
    Ok(match source {
        Source::Conjdiag { spec } => make_conjugated_diagonal(spec, window)?.0,
        Source::Ulam { spec } => make_ulam_transfer(spec, window)?,
        Source::OrbitDir { path } => read_orbit_dir(Path::new(path))?,
    })
}

fn finite(what: &str, values: impl IntoIterator<Item = f64>) -> Result<(), CliError> {
    if values.into_iter().all(f64::is_finite) {
        Ok(())
    } else {
        Err(CliError::non_finite(what))
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write_text(path, &(serde_json::to_string_pretty(value).expect("report serializes") + "\n"))
}

#[derive(Serialize)]
struct GinelliEcho {
    k: usize,
    n1: usize,
    n2: usize,
    qr_stride: usize,
    rank_tol: f64,
    center: i64,
    seed: u64,
    multiplicities: Option<Vec<usize>>,
}

#[derive(Serialize)]
struct RunBlock {
    block: usize,
    columns: [usize; 2],
    /// Distance to the exact Oseledets space, when one is known.
    oracle_distance: Option<f64>,
}

#[derive(Serialize)]
struct RunReport {
    experiment: &'static str,
    source: Source,
    ginelli: GinelliEcho,
    blocks: Vec<RunBlock>,
    /// Output vectors, one inner list per column.
    vectors: Vec<Vec<f64>>,
    r_log_sums: Vec<f64>,
    lyapunov: Vec<f64>,
    tool_version: &'static str,
}

pub fn cmd_run(s: &Settings) -> Result<(), CliError> {
    let source = source(s)?;
    let out = s.path(&OUT)?;
    let n1: usize = s.parsed(&N1)?.ok_or_else(|| CliError::Config("missing required setting ginelli.n1 (flag --n1)".into()))?;
    let n2: usize = s.or(&N2, n1)?;
    let center: i64 = s.or(&CENTER, 0)?;
    let oracle = match &source {
        Source::Conjdiag { spec } => Some(OracleSplitting::new(spec.clone())?),
        _ => None,
    };
    let default_k = match (&source, &oracle) {
        (_, Some(o)) => Some(o.finite_dim()),
        (Source::Ulam { .. }, _) => Some(1),
        _ => None,
    };
    let k = match (s.parsed::<usize>(&K)?, default_k) {
        (Some(k), _) | (None, Some(k)) => k,
        (None, None) => return Err(CliError::Config("missing required setting ginelli.k (flag --k)".into())),
    };
    let multiplicities = match (s.list::<usize>(&MULTIPLICITIES)?, &oracle) {
        (Some(m), _) => Some(m),
        (None, Some(o)) if o.finite_dim() == k => Some(o.multiplicities()),
        _ => None,
    };
    let cfg = GinelliConfig {
        qr_stride: s.or(&QR_STRIDE, 1)?,
        rank_tol: s.or(&RANK_TOL, clvkit::grassmann::DEFAULT_RANK_TOL)?,
        center,
        seed: sub_seed(s, &GINELLI_SEED, "ginelli")?,
        multiplicities: multiplicities.clone(),
        ..GinelliConfig::new(k, n1, n2)
    };
    let orbit = build_orbit(&source, center - n1 as i64..center + n2.max(1) as i64)?;
    cfg.validate(&orbit)?;
    let inputs = GinelliInputs::sample(orbit.ambient_dim(), k, cfg.seed);
    let (result, record) = run(&orbit, &cfg, &inputs)?;
    let lyapunov = lyapunov_from_r(&record)?;
    let steps = record.total_steps() as f64;
    let exact = match (&oracle, &multiplicities) {
        (Some(o), Some(m)) if *m == o.multiplicities() => Some(o.spaces_at(center)),
        _ => None,
    };
    let mut blocks = Vec::with_capacity(result.blocks.len());
    for (j, range) in result.blocks.iter().enumerate() {
        let oracle_distance = match &exact {
            Some(e) => Some(grassmann_distance(&result.block_spans[j], &e[j])?),
            None => None,
        };
        blocks.push(RunBlock {
            block: j + 1,
            columns: [range.start, range.end],
            oracle_distance,
        });
    }
    let report = RunReport {
        experiment: "run",
        source,
        ginelli: GinelliEcho {
            k,
            n1,
            n2,
            qr_stride: cfg.qr_stride,
            rank_tol: cfg.rank_tol,
            center,
            seed: cfg.seed,
            multiplicities,
        },
        vectors: result.vectors.column_iter().map(|c| c.iter().copied().collect()).collect(),
        r_log_sums: lyapunov.iter().map(|l| l * steps).collect(),
        lyapunov,
        blocks,
        tool_version: TOOL_VERSION,
    };
    finite("vectors", report.vectors.iter().flatten().copied())?;
    finite("exponents", report.lyapunov.iter().copied())?;
    finite("oracle distances", report.blocks.iter().filter_map(|b| b.oracle_distance))?;
    write_json(&out, &report)?;
    for b in &report.blocks {
        match b.oracle_distance {
            Some(d) => println!("block {}: columns {}..{}, distance to exact space {d:.3e}", b.block, b.columns[0], b.columns[1]),
            None => println!("block {}: columns {}..{}", b.block, b.columns[0], b.columns[1]),
        }
    }
    println!("exponents: {:?}", report.lyapunov);
    println!("wrote {}", out.display());
    Ok(())
}

fn parse_ray(s: &Settings) -> Result<Ray, CliError> {
    match s.list::<usize>(&RAY)?.as_deref() {
        None => Ok(Ray::DIAGONAL),
        Some([past, future]) => Ok(Ray {
            past: *past,
            future: *future,
        }),
        Some(other) => Err(CliError::Config(format!("converge.ray: expected past,future, got {other:?}"))),
    }
}

pub fn cmd_converge(s: &Settings) -> Result<(), CliError> {
    if let Some(family) = s.text(&ORBIT_SPEC).filter(|f| *f != "conjdiag") {
        return Err(CliError::Config(format!("converge needs an exact splitting; orbit.spec {family:?} has none")));
    }
    let spec = conjdiag_spec(s)?;
    let out = s.path(&OUT)?;
    let csv = s.text(&CSV).map(PathBuf::from);
    let kind = match s.text(&KIND).unwrap_or("clv") {
        "clv" => ConvergenceKind::Clv,
        "forward" => ConvergenceKind::Forward,
        other => return Err(CliError::Config(format!("converge.kind: {other:?} (expected clv or forward)"))),
    };
    let cfg = ExperimentConfig {
        slack_fraction: s.or(&SLACK, 0.15)?,
        kind,
        ray: parse_ray(s)?,
        qr_stride: s.or(&QR_STRIDE, 1)?,
        rank_tol: s.or(&RANK_TOL, clvkit::grassmann::DEFAULT_RANK_TOL)?,
        ..ExperimentConfig::new(
            parse_grid(s.text(&GRID).unwrap_or("10:60:10"))?,
            s.list(&SEEDS)?.unwrap_or_else(|| vec![1, 2, 3, 4, 5]),
        )
    };
    cfg.validate()?;
    let report = convergence_experiment(&spec, &cfg)?;
    for b in &report.blocks {
        finite("distances", b.distances.iter().map(|p| p.1))?;
        finite("fitted rates", b.fitted_rate)?;
    }
    write_text(&out, &report.to_json())?;
    if let Some(csv) = &csv {
        write_text(csv, &report.to_csv())?;
    }
    for b in &report.blocks {
        let rate = b.fitted_rate.map_or("n/a".to_string(), |r| format!("{r:.4}"));
        let gap = b.theoretical_gap.map_or("inf".to_string(), |g| format!("{g:.4}"));
        let verdict = if b.pass { "pass" } else { "FAIL" };
        let note = if b.trivial { " (at rounding floor)" } else { "" };
        println!("block {} (dim {}): rate {rate}, gap {gap}: {verdict}{note}", b.block, b.dim);
    }
    println!("wrote {}", out.display());
    if report.pass {
        Ok(())
    } else {
        let failing: Vec<String> = report.blocks.iter().filter(|b| !b.pass).map(|b| b.block.to_string()).collect();
        Err(CliError::ChecksFailed(format!("blocks {} converge slower than their gap", failing.join(", "))))
    }
}

#[derive(Serialize)]
struct LemmaSummary {
    lemma: LemmaId,
    seed: u64,
    instances: usize,
    precondition_met: usize,
    attempts: usize,
    violations: usize,
    tightest_ratio: f64,
}

#[derive(Serialize)]
struct LemmaReport {
    experiment: &'static str,
    seed: u64,
    samples: usize,
    lemmas: Vec<LemmaSummary>,
    tool_version: &'static str,
}

fn lemma_csv(sweeps: &[SweepSummary]) -> String {
    let mut out = String::from("lemma,instance,seed,lhs,lhs_exact,rhs,delta,satisfied,precondition_met,samples\n");
    for s in sweeps {
        for r in &s.records {
            let delta = r.delta.map_or(String::new(), |d| d.to_string());
            writeln!(
                out,
                "{},\"{}\",{},{},{},{},{},{},{},{}",
                r.lemma, r.instance, r.seed, r.lhs, r.lhs_exact, r.rhs, delta, r.satisfied, r.precondition_met, r.samples
            )
            .expect("writing to a String");
        }
    }
    out
}

pub fn cmd_lemma_check(s: &Settings) -> Result<(), CliError> {
    let lemmas: Vec<LemmaId> = match s.text(&LEMMA).unwrap_or("all") {
        "all" => LemmaId::ALL.to_vec(),
        name => vec![name.parse().map_err(CliError::Config)?],
    };
    let instances: usize = s.or(&INSTANCES, 1000)?;
    if instances == 0 {
        return Err(CliError::Config("lemma.instances must be positive".into()));
    }
    let samples: usize = s.or(&SAMPLES, clvkit::diagnostics::lemmas::DEFAULT_SAMPLES)?;
    if samples == 0 {
        return Err(CliError::Config("lemma.samples must be positive".into()));
    }
    let root = root_seed(s)?;
    let mut sweeps = Vec::with_capacity(lemmas.len());
    for lemma in lemmas {
        sweeps.push(lemma_sweep(lemma, instances, derive_seed(root, lemma.as_str()), samples)?);
    }
    let report = LemmaReport {
        experiment: "lemma-check",
        seed: root,
        samples,
        lemmas: sweeps
            .iter()
            .map(|sw| LemmaSummary {
                lemma: sw.lemma,
                seed: derive_seed(root, sw.lemma.as_str()),
                instances: sw.instances,
                precondition_met: sw.precondition_met,
                attempts: sw.attempts,
                violations: sw.violations,
                tightest_ratio: sw.tightest,
            })
            .collect(),
        tool_version: TOOL_VERSION,
    };
    for sw in &sweeps {
        let met = sw.records.iter().filter(|r| r.precondition_met);
        finite("lemma records", met.flat_map(|r| [r.lhs, r.lhs_exact, r.rhs]))?;
        println!(
            "{}: {} of {} instances meet the precondition ({} draws), {} violations, largest lhs/rhs {:.3}",
            sw.lemma, sw.precondition_met, sw.instances, sw.attempts, sw.violations, sw.tightest
        );
    }
    if let Some(out) = s.text(&OUT) {
        write_json(Path::new(out), &report)?;
    }
    if let Some(csv) = s.text(&CSV) {
        write_text(Path::new(csv), &lemma_csv(&sweeps))?;
    }
    let violations: usize = sweeps.iter().map(|s| s.violations).sum();
    if violations == 0 {
        Ok(())
    } else {
        Err(CliError::ChecksFailed(format!("{violations} inequality violations")))
    }
}

#[derive(Serialize)]
struct UlamRun {
    bins: usize,
    exponents: Vec<f64>,
    l1_to_uniform: f64,
}

#[derive(Serialize)]
struct UlamPair {
    bins_a: usize,
    bins_b: usize,
    distance: f64,
}

#[derive(Serialize)]
struct UlamReport {
    experiment: &'static str,
    expansion: u32,
    eps: f64,
    seed: u64,
    n1: usize,
    n2: usize,
    k_max: usize,
    runs: Vec<UlamRun>,
    stability: Vec<UlamPair>,
    tool_version: &'static str,
}

pub fn cmd_ulam(s: &Settings) -> Result<(), CliError> {
    let dir = s.path(&OUT_DIR)?;
    let bins_list = s.list::<usize>(&BINS)?.unwrap_or_else(|| vec![64, 128, 256]);
    let k_max: usize = s.or(&K_MAX, 1)?;
    let n1: usize = s.or(&N1, 40)?;
    let n2: usize = s.or(&N2, n1)?;
    let specs = bins_list.iter().map(|&b| ulam_spec(s, b)).collect::<Result<Vec<_>, _>>()?;
    let ginelli_seed = sub_seed(s, &GINELLI_SEED, "ginelli")?;
    let mut runs = Vec::new();
    let mut leading = Vec::new();
    let mut density_csv = String::from("bins,bin,x,density\n");
    for spec in &specs {
        let cfg = GinelliConfig {
            seed: ginelli_seed,
            ..GinelliConfig::new(k_max, n1, n2)
        };
        let orbit = make_ulam_transfer(spec, -(n1 as i64)..n2.max(1) as i64)?;
        cfg.validate(&orbit)?;
        let (result, record) = run(&orbit, &cfg, &GinelliInputs::sample(spec.bins, k_max, ginelli_seed))?;
        let v = result.vectors.column(0).into_owned();
        let density = density_from_vector(&v).ok_or_else(|| CliError::Numerical {
            name: "cli::ZeroMass",
            message: format!("leading vector for {} bins has zero mass", spec.bins),
        })?;
        finite("density", density.iter().copied())?;
        for (i, rho) in density.iter().enumerate() {
            let x = (i as f64 + 0.5) / spec.bins as f64;
            writeln!(density_csv, "{},{i},{x},{rho}", spec.bins).expect("writing to a String");
        }
        let exponents = lyapunov_from_r(&record)?;
        finite("exponents", exponents.iter().copied())?;
        runs.push(UlamRun {
            bins: spec.bins,
            exponents,
            l1_to_uniform: l1_distance_to_uniform(&density),
        });
        leading.push(v);
    }
    let mut stability = Vec::new();
    let mut stability_csv = String::from("bins_a,bins_b,distance\n");
    for i in 0..leading.len() {
        for j in i + 1..leading.len() {
            let distance = truncation_distance(&leading[i], &leading[j])?;
            writeln!(stability_csv, "{},{},{distance}", bins_list[i], bins_list[j]).expect("writing to a String");
            stability.push(UlamPair {
                bins_a: bins_list[i],
                bins_b: bins_list[j],
                distance,
            });
        }
    }
    let first = &specs[0];
    let report = UlamReport {
        experiment: "ulam",
        expansion: first.expansion,
        eps: first.eps,
        seed: first.seed,
        n1,
        n2,
        k_max,
        runs,
        stability,
        tool_version: TOOL_VERSION,
    };
    write_text(&dir.join("density.csv"), &density_csv)?;
    write_text(&dir.join("stability.csv"), &stability_csv)?;
    write_json(&dir.join("ulam.json"), &report)?;
    for r in &report.runs {
        println!("{} bins: leading exponent {:.3e}, L1 distance to uniform {:.3e}", r.bins, r.exponents[0], r.l1_to_uniform);
    }
    for p in &report.stability {
        println!("{} vs {} bins: leading-vector distance {:.3e}", p.bins_a, p.bins_b, p.distance);
    }
    println!("wrote {}", dir.display());
    Ok(())
}

pub fn cmd_export_orbit(s: &Settings) -> Result<(), CliError> {
    let source = synthetic_source(s)?;
    let dir = s.path(&OUT_DIR)?;
    let start: i64 = s.or(&ORBIT_START, -60)?;
    let end: i64 = s.or(&ORBIT_END, 60)?;
    if end <= start {
        return Err(CliError::Config(format!("orbit window [{start}, {end}) is empty")));
    }
    let orbit = build_orbit(&source, start..end)?;
    let manifest = write_orbit_dir(&orbit, &dir)?;
    println!(
        "wrote {} generators of dimension {} for indices [{}, {}) to {}",
        manifest.files.len(),
        manifest.ambient_dim,
        manifest.start,
        manifest.end,
        dir.display()
    );
    Ok(())
}
