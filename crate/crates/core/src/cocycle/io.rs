//! Orbit directories in the `CLVMAT1` layout.
//!
//! Each generator lives in its own file:
//!
//! ```text
//! offset  size     content
//! 0       7        ASCII "CLVMAT1"
//! 7       4        d, u32 little-endian
//! 11      8        orbit index n, i64 little-endian
//! 19      8·d·d    entries of L(σ^n ω), f64 little-endian, column-major
//! ```
//!
//! A `manifest.json` next to the files records the format tag, the ambient
//! dimension, the half-open index window and the file names in index order.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{CocycleError, CocycleOrbit};

pub const MATRIX_MAGIC: &[u8; 7] = b"CLVMAT1";
pub const MANIFEST_FILE: &str = "manifest.json";
const HEADER_LEN: usize = 7 + 4 + 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitManifest {
    pub format: String,
    pub ambient_dim: usize,
    pub start: i64,
    pub end: i64,
    pub files: Vec<String>,
}

fn io_err(path: &Path, source: std::io::Error) -> CocycleError {
    CocycleError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn file_name(index: i64) -> String {
    format!("L_{index:+07}.clvmat")
}

pub fn encode_matrix(index: i64, m: &DMatrix<f64>) -> Vec<u8> {
    let d = m.nrows();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * d * d);
    out.extend_from_slice(MATRIX_MAGIC);
    out.extend_from_slice(&(d as u32).to_le_bytes());
    out.extend_from_slice(&index.to_le_bytes());
    for v in m.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_matrix(bytes: &[u8]) -> Result<(i64, DMatrix<f64>), CocycleError> {
    if bytes.len() < HEADER_LEN || &bytes[..7] != MATRIX_MAGIC {
        return Err(CocycleError::Format("missing CLVMAT1 header".into()));
    }
    let d = u32::from_le_bytes(bytes[7..11].try_into().expect("4 bytes")) as usize;
    let index = i64::from_le_bytes(bytes[11..19].try_into().expect("8 bytes"));
    let expected = d
        .checked_mul(d)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| CocycleError::Format(format!("dimension {d} too large")))?;
    if d == 0 || bytes.len() != expected {
        return Err(CocycleError::Format(format!(
            "matrix payload for d={d} should be {expected} bytes, found {}",
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok((index, DMatrix::from_vec(d, d, values)))
}

/// Writes every generator of `orbit` plus the manifest into `dir` (created if needed).
pub fn write_orbit_dir(orbit: &CocycleOrbit, dir: &Path) -> Result<OrbitManifest, CocycleError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let range = orbit.range();
    let mut files = Vec::with_capacity(orbit.generators().len());
    for (n, g) in range.clone().zip(orbit.generators()) {
        let name = file_name(n);
        let path = dir.join(&name);
        fs::write(&path, encode_matrix(n, g)).map_err(|e| io_err(&path, e))?;
        files.push(name);
    }
    let manifest = OrbitManifest {
        format: "CLVMAT1".into(),
        ambient_dim: orbit.ambient_dim(),
        start: range.start,
        end: range.end,
        files,
    };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
    Ok(manifest)
}

/// Reads an orbit directory, checking every header against the manifest.
pub fn read_orbit_dir(dir: &Path) -> Result<CocycleOrbit, CocycleError> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    let manifest: OrbitManifest =
        serde_json::from_str(&text).map_err(|e| CocycleError::Format(format!("{}: {e}", path.display())))?;
    if manifest.format != "CLVMAT1" {
        return Err(CocycleError::Format(format!("unsupported format {:?}", manifest.format)));
    }
    let len = manifest.end - manifest.start;
    if len <= 0 || manifest.files.len() as i64 != len {
        return Err(CocycleError::Format(format!(
            "manifest lists {} files for window [{}, {})",
            manifest.files.len(),
            manifest.start,
            manifest.end
        )));
    }
    let mut generators = Vec::with_capacity(manifest.files.len());
    for (expected_index, name) in (manifest.start..manifest.end).zip(&manifest.files) {
        let path = dir.join(name);
        let bytes = fs::read(&path).map_err(|e| io_err(&path, e))?;
        let (index, m) = decode_matrix(&bytes)?;
        if index != expected_index || m.nrows() != manifest.ambient_dim {
            return Err(CocycleError::Format(format!(
                "{name}: header says index {index}, d={}, manifest expects index {expected_index}, d={}",
                m.nrows(),
                manifest.ambient_dim
            )));
        }
        generators.push(m);
    }
    CocycleOrbit::new(manifest.start, generators)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let m = DMatrix::from_column_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let bytes = encode_matrix(-3, &m);
        assert_eq!(&bytes[..7], b"CLVMAT1");
        assert_eq!(&bytes[7..11], &[2, 0, 0, 0]);
        assert_eq!(&bytes[11..19], &(-3i64).to_le_bytes());
        assert_eq!(&bytes[19..27], &1.0f64.to_le_bytes());
        assert_eq!(&bytes[27..35], &2.0f64.to_le_bytes());
        assert_eq!(bytes.len(), 19 + 32);
        assert_eq!(decode_matrix(&bytes).unwrap(), (-3, m));
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let bytes = encode_matrix(0, &DMatrix::identity(3, 3));
        assert!(matches!(decode_matrix(&bytes[..bytes.len() - 1]), Err(CocycleError::Format(_))));
        assert!(matches!(decode_matrix(b"CLVMAT0xxxxxxxxxxxxxxxx"), Err(CocycleError::Format(_))));
    }

    #[test]
    fn directory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let orbit = CocycleOrbit::from_fn(-2..3, |n| DMatrix::from_fn(3, 3, |i, j| (i as f64 - j as f64) * n as f64 + 0.1)).unwrap();
        let manifest = write_orbit_dir(&orbit, dir.path()).unwrap();
        assert_eq!((manifest.start, manifest.end, manifest.ambient_dim), (-2, 3, 3));
        assert_eq!(read_orbit_dir(dir.path()).unwrap(), orbit);
    }

    #[test]
    fn missing_manifest_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(read_orbit_dir(dir.path()), Err(CocycleError::Io { .. })));
    }
}
