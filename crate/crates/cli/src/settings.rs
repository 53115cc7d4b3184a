//! Configuration from a TOML file with dotted keys, overridden by flags.
//!
//! Every key has exactly one flag. A file may only contain keys that the
//! chosen subcommand accepts; anything else is rejected before work starts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Arg, ArgMatches, Command};

use crate::error::CliError;

/// One configuration key and the flag that sets it.
pub struct Key {
    pub name: &'static str,
    pub flag: &'static str,
    pub help: &'static str,
}

const fn key(name: &'static str, flag: &'static str, help: &'static str) -> Key {
    Key { name, flag, help }
}

pub const SEED: Key = key("seed", "seed", "Root seed; per-subsystem seeds are derived from it");
pub const ORBIT_SPEC: Key = key("orbit.spec", "spec", "Synthetic orbit family: conjdiag or ulam");
pub const ORBIT_RATES: Key = key("orbit.rates", "rates", "Growth rates, e.g. ln4,ln2,0,-inf");
pub const ORBIT_CONDITIONING: Key = key("orbit.conditioning", "conditioning", "Conjugator condition bound (>= 1)");
pub const ORBIT_SEED: Key = key("orbit.seed", "orbit-seed", "Seed of the synthetic orbit (default: derived)");
pub const ORBIT_DIR: Key = key("orbit.dir", "orbit-dir", "Directory of CLVMAT1 matrices with a manifest");
pub const ORBIT_START: Key = key("orbit.start", "start", "First orbit index to export");
pub const ORBIT_END: Key = key("orbit.end", "end", "One past the last orbit index to export");
pub const K: Key = key("ginelli.k", "k", "Number of vectors");
pub const N1: Key = key("ginelli.n1", "n1", "Past steps");
pub const N2: Key = key("ginelli.n2", "n2", "Future steps");
pub const QR_STRIDE: Key = key("ginelli.qr_stride", "qr-stride", "Generator applications between QR steps");
pub const RANK_TOL: Key = key("ginelli.rank_tol", "rank-tol", "Relative rank tolerance");
pub const CENTER: Key = key("ginelli.center", "center", "Orbit index of the base point");
pub const MULTIPLICITIES: Key = key("ginelli.multiplicities", "multiplicities", "Block sizes, e.g. 1,2,1");
pub const GINELLI_SEED: Key = key("ginelli.seed", "ginelli-seed", "Seed of the initial vectors (default: derived)");
pub const GRID: Key = key("converge.grid", "grid", "Run lengths N: list 10,20,30 or range 10:60:10");
pub const SEEDS: Key = key("converge.seeds", "seeds", "Seeds of the initial vectors, e.g. 1,2,3");
pub const SLACK: Key = key("converge.slack", "slack", "Allowed slack as a fraction of each gap");
pub const KIND: Key = key("converge.kind", "kind", "clv (block spans) or forward (forward spans)");
pub const RAY: Key = key("converge.ray", "ray", "Run lengths as multiples of N: past,future");
pub const LEMMA: Key = key("lemma.name", "lemma", "forward, forward-projection, backward or all");
pub const INSTANCES: Key = key("lemma.instances", "instances", "Randomized instances per estimate");
pub const SAMPLES: Key = key("lemma.samples", "samples", "Unit vectors per sampled supremum");
pub const BINS: Key = key("ulam.bins", "bins", "Bin counts, e.g. 64,128,256");
pub const EXPANSION: Key = key("ulam.expansion", "expansion", "Integer expansion factor of the circle map");
pub const EPS: Key = key("ulam.eps", "eps", "Amplitude of the driven perturbation");
pub const K_MAX: Key = key("ulam.k_max", "k-max", "Number of leading vectors");
pub const OUT: Key = key("out.json", "out", "JSON report path");
pub const CSV: Key = key("out.csv", "csv", "CSV table path");
pub const OUT_DIR: Key = key("out.dir", "out-dir", "Output directory");

const CONJDIAG_KEYS: [&Key; 4] = [&ORBIT_SPEC, &ORBIT_RATES, &ORBIT_CONDITIONING, &ORBIT_SEED];
const ULAM_KEYS: [&Key; 3] = [&BINS, &EXPANSION, &EPS];

pub fn run_keys() -> Vec<&'static Key> {
    let mut keys = vec![&SEED, &ORBIT_DIR, &K, &N1, &N2, &QR_STRIDE, &RANK_TOL, &CENTER, &MULTIPLICITIES, &GINELLI_SEED, &OUT];
    keys.extend(CONJDIAG_KEYS);
    keys.extend(ULAM_KEYS);
    keys
}

pub fn converge_keys() -> Vec<&'static Key> {
    let mut keys = vec![&SEED, &GRID, &SEEDS, &SLACK, &KIND, &RAY, &QR_STRIDE, &RANK_TOL, &OUT, &CSV];
    keys.extend(CONJDIAG_KEYS);
    keys
}

pub fn lemma_keys() -> Vec<&'static Key> {
    vec![&SEED, &LEMMA, &INSTANCES, &SAMPLES, &OUT, &CSV]
}

pub fn ulam_keys() -> Vec<&'static Key> {
    let mut keys = vec![&SEED, &ORBIT_SEED, &K_MAX, &N1, &N2, &GINELLI_SEED, &OUT_DIR];
    keys.extend(ULAM_KEYS);
    keys
}

pub fn export_keys() -> Vec<&'static Key> {
    let mut keys = vec![&SEED, &ORBIT_START, &ORBIT_END, &OUT_DIR];
    keys.extend(CONJDIAG_KEYS);
    keys.extend(ULAM_KEYS);
    keys
}

/// Adds `--config` and one flag per key.
pub fn with_keys(mut cmd: Command, keys: &[&'static Key]) -> Command {
    cmd = cmd.arg(
        Arg::new("config")
            .long("config")
            .value_name("FILE")
            .help("TOML file with dotted keys; flags override it"),
    );
    for k in keys {
        cmd = cmd.arg(
            Arg::new(k.name)
                .long(k.flag)
                .value_name("VALUE")
                .allow_hyphen_values(true)
                .help(format!("{} [key: {}]", k.help, k.name)),
        );
    }
    cmd
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, String>) -> Result<(), CliError> {
    for (k, v) in table {
        let name = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(t) => flatten(&name, t, out)?,
            other => {
                out.insert(name.clone(), scalar_text(&name, other)?);
            }
        }
    }
    Ok(())
}

fn scalar_text(name: &str, v: &toml::Value) -> Result<String, CliError> {
    Ok(match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        toml::Value::Boolean(b) => b.to_string(),
        toml::Value::Array(items) => items
            .iter()
            .map(|item| scalar_text(name, item))
            .collect::<Result<Vec<_>, _>>()?
            .join(","),
        _ => return Err(CliError::Config(format!("{name}: unsupported value type"))),
    })
}

/// Resolved key/value pairs for one subcommand.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn resolve(matches: &ArgMatches, keys: &[&'static Key]) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        if let Some(path) = matches.get_one::<String>("config") {
            let path = Path::new(path);
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let table: toml::Table = text
                .parse()
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            flatten("", &table, &mut values)?;
            if let Some(unknown) = values.keys().find(|k| !keys.iter().any(|key| key.name == k.as_str())) {
                return Err(CliError::Config(format!("{}: unknown key {unknown:?}", path.display())));
            }
        }
        for k in keys {
            if let Some(v) = matches.get_one::<String>(k.name) {
                values.insert(k.name.to_string(), v.clone());
            }
        }
        Ok(Self { values })
    }

    #[cfg(test)]
    pub fn from_pairs(pairs: &[(&str, &str)]) -> Self {
        Self {
            values: pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }

    pub fn has(&self, key: &Key) -> bool {
        self.values.contains_key(key.name)
    }

    pub fn text(&self, key: &Key) -> Option<&str> {
        self.values.get(key.name).map(String::as_str)
    }

    pub fn required(&self, key: &Key) -> Result<&str, CliError> {
        self.text(key)
            .ok_or_else(|| CliError::Config(format!("missing required setting {} (flag --{})", key.name, key.flag)))
    }

    pub fn path(&self, key: &Key) -> Result<PathBuf, CliError> {
        self.required(key).map(PathBuf::from)
    }

    pub fn parsed<T: std::str::FromStr>(&self, key: &Key) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.text(key)
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|e| CliError::Config(format!("{} = {s:?}: {e}", key.name)))
            })
            .transpose()
    }

    pub fn or<T: std::str::FromStr>(&self, key: &Key, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn list<T: std::str::FromStr>(&self, key: &Key) -> Result<Option<Vec<T>>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.text(key).map(|s| parse_list(key.name, s)).transpose()
    }
}

pub fn parse_list<T: std::str::FromStr>(name: &str, s: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(|part| {
            part.trim()
                .parse()
                .map_err(|e| CliError::Config(format!("{name}: {part:?}: {e}")))
        })
        .collect()
}

/// `ln4`, `-ln2`, `-inf`, or a plain number.
pub fn parse_rate(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest.trim()),
        None => (1.0, s.strip_prefix('+').unwrap_or(s).trim()),
    };
    let value = if body == "inf" {
        f64::INFINITY
    } else if let Some(arg) = body.strip_prefix("ln") {
        let x: f64 = arg.parse().map_err(|_| format!("bad rate {s:?}"))?;
        if !(x > 0.0) {
            return Err(format!("bad rate {s:?}: logarithm of a non-positive number"));
        }
        x.ln()
    } else {
        body.parse().map_err(|_| format!("bad rate {s:?}"))?
    };
    if value == f64::INFINITY && sign > 0.0 {
        return Err("+inf is not a valid rate".into());
    }
    Ok(sign * value)
}

pub fn parse_rates(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|p| parse_rate(p).map_err(|e| CliError::Config(format!("orbit.rates: {e}"))))
        .collect()
}

/// Comma list `10,20,30` or inclusive range `start:end:step`.
pub fn parse_grid(s: &str) -> Result<Vec<usize>, CliError> {
    let bad = |why: &str| CliError::Config(format!("converge.grid = {s:?}: {why}"));
    if s.contains(':') {
        let parts: Vec<usize> = parse_list::<usize>("converge.grid", &s.replace(':', ","))?;
        let [start, end, step] = parts[..] else {
            return Err(bad("range form is start:end:step"));
        };
        if step == 0 || start > end {
            return Err(bad("empty or zero-step range"));
        }
        return Ok((start..=end).step_by(step).collect());
    }
    parse_list("converge.grid", s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rates() {
        let r = parse_rates("ln4, -ln2,0,0.5,-inf").unwrap();
        assert_eq!(r[..4], [4f64.ln(), -(2f64.ln()), 0.0, 0.5]);
        assert_eq!(r[4], f64::NEG_INFINITY);
        assert!(parse_rates("inf").is_err());
        assert!(parse_rates("ln0").is_err());
        assert!(parse_rates("lnx").is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("10:60:10").unwrap(), vec![10, 20, 30, 40, 50, 60]);
        assert_eq!(parse_grid("3,5").unwrap(), vec![3, 5]);
        assert!(parse_grid("10:5:1").is_err());
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("a,b").is_err());
    }

    #[test]
    fn nested_tables_flatten_to_dotted_keys() {
        let table: toml::Table = "seed = 3\n[ginelli]\nn1 = 40\nmultiplicities = [1, 2]\n[orbit]\nconditioning = 2.5\n"
            .parse()
            .unwrap();
        let mut out = BTreeMap::new();
        flatten("", &table, &mut out).unwrap();
        assert_eq!(out["seed"], "3");
        assert_eq!(out["ginelli.n1"], "40");
        assert_eq!(out["ginelli.multiplicities"], "1,2");
        assert_eq!(out["orbit.conditioning"], "2.5");
    }

    #[test]
    fn typed_access() {
        let s = Settings::from_pairs(&[("ginelli.n1", "12"), ("converge.seeds", "1, 2,3")]);
        assert_eq!(s.or(&N1, 5usize).unwrap(), 12);
        assert_eq!(s.or(&N2, 5usize).unwrap(), 5);
        assert_eq!(s.list::<u64>(&SEEDS).unwrap().unwrap(), vec![1, 2, 3]);
        assert!(matches!(s.required(&OUT), Err(CliError::Config(_))));
    }
}
