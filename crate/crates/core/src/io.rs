//! File formats: binary path files, JSON manifests, key=value configs.
//!
//! Path file layout, all integers and floats little-endian:
//!
//! ```text
//! magic      8 bytes  "HERMPATH"
//! version    u32
//! rank       u32
//! hurst      f64
//! step       f64      1 / steps_per_unit
//! spu        u64      steps per unit time
//! points     u64      values per path
//! paths      u64
//! seed       u64      master seed
//! simulator  u8       0 external, 1 direct, 2 nclt
//! payload    paths × points f64
//! footer     32 bytes SHA-256 of the header, 32 bytes SHA-256 of the payload
//! ```

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hermite::HermiteParams;
use crate::path::{ChaosPath, Provenance, SimulatorKind};

pub const PATH_MAGIC: &[u8; 8] = b"HERMPATH";
pub const PATH_FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 4 + 8 + 8 + 8 + 8 + 8 + 8 + 1;

#[derive(Debug, Clone, PartialEq)]
pub struct PathFile {
    pub params: HermiteParams,
    pub steps_per_unit: u64,
    pub seed: u64,
    pub kind: SimulatorKind,
    pub points: usize,
    /// Concatenated path values, `points` per path.
    pub values: Vec<f64>,
}

impl PathFile {
    /// Packs an ensemble sharing parameters, grid, seed and simulator.
    pub fn from_paths(paths: &[ChaosPath]) -> Result<Self> {
        let first = paths.first().ok_or_else(|| Error::Format("no paths to write".into()))?;
        let points = first.len();
        for p in paths {
            if p.params != first.params
                || p.steps_per_unit() != first.steps_per_unit()
                || p.len() != points
                || p.provenance.kind != first.provenance.kind
                || p.provenance.master_seed != first.provenance.master_seed
            {
                return Err(Error::Format("paths differ in parameters, grid or provenance".into()));
            }
        }
        Ok(PathFile {
            params: first.params,
            steps_per_unit: first.steps_per_unit(),
            seed: first.provenance.master_seed,
            kind: first.provenance.kind,
            points,
            values: paths.iter().flat_map(|p| p.values().iter().copied()).collect(),
        })
    }

    pub fn path_count(&self) -> usize {
        if self.points == 0 {
            0
        } else {
            self.values.len() / self.points
        }
    }

    pub fn to_paths(&self) -> Result<Vec<ChaosPath>> {
        self.values
            .chunks(self.points)
            .enumerate()
            .map(|(i, v)| {
                let prov = Provenance {
                    kind: self.kind,
                    master_seed: self.seed,
                    index: i as u64,
                    steps_per_unit: self.steps_per_unit,
                    note: "read from path file".into(),
                };
                ChaosPath::new(self.params, self.steps_per_unit, v.to_vec(), prov)
            })
            .collect()
    }

    fn header(&self) -> Vec<u8> {
        let mut h = Vec::with_capacity(HEADER_LEN);
        h.extend_from_slice(PATH_MAGIC);
        h.extend_from_slice(&PATH_FORMAT_VERSION.to_le_bytes());
        h.extend_from_slice(&self.params.rank().to_le_bytes());
        h.extend_from_slice(&self.params.hurst().to_le_bytes());
        h.extend_from_slice(&(1.0 / self.steps_per_unit as f64).to_le_bytes());
        h.extend_from_slice(&self.steps_per_unit.to_le_bytes());
        h.extend_from_slice(&(self.points as u64).to_le_bytes());
        h.extend_from_slice(&(self.path_count() as u64).to_le_bytes());
        h.extend_from_slice(&self.seed.to_le_bytes());
        h.push(self.kind.tag());
        h
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = self.header();
        let mut out = header.clone();
        out.reserve(self.values.len() * 8 + 64);
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let payload_digest = Sha256::digest(&out[HEADER_LEN..]);
        out.extend_from_slice(&Sha256::digest(&header));
        out.extend_from_slice(&payload_digest);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN + 64 || &bytes[..8] != PATH_MAGIC {
            return Err(Error::Format("not a path file".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let version = u32_at(8);
        if version != PATH_FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported path file version {version}")));
        }
        let params = HermiteParams::new(u32_at(12), f64_at(16))?;
        let spu = u64_at(32);
        let points = u64_at(40) as usize;
        let count = u64_at(48) as usize;
        let seed = u64_at(56);
        let kind = SimulatorKind::from_tag(bytes[64])?;
        let payload_len = points
            .checked_mul(count)
            .and_then(|v| v.checked_mul(8))
            .ok_or_else(|| Error::Format("payload size overflows".into()))?;
        if bytes.len() != HEADER_LEN + payload_len + 64 {
            return Err(Error::Format(format!(
                "point count does not match payload: expected {} bytes, file has {}",
                HEADER_LEN + payload_len + 64,
                bytes.len()
            )));
        }
        let footer = &bytes[HEADER_LEN + payload_len..];
        if Sha256::digest(&bytes[..HEADER_LEN]).as_slice() != &footer[..32] {
            return Err(Error::Format("header digest mismatch".into()));
        }
        let payload = &bytes[HEADER_LEN..HEADER_LEN + payload_len];
        if Sha256::digest(payload).as_slice() != &footer[32..] {
            return Err(Error::Format("payload digest mismatch".into()));
        }
        let values = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(PathFile { params, steps_per_unit: spu, seed, kind, points, values })
    }

    pub fn write(&self, path: &Path) -> Result<String> {
        let bytes = self.to_bytes();
        std::fs::File::create(path)?.write_all(&bytes)?;
        Ok(sha256_hex(&bytes))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        open_input(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> Result<String> {
    let mut bytes = Vec::new();
    open_input(path)?.read_to_end(&mut bytes)?;
    Ok(sha256_hex(&bytes))
}

/// Opens an input file; a missing file is reported as such rather than as
/// a generic I/O error.
pub fn open_input(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::MissingInput(path.display().to_string())
        } else {
            Error::Io(format!("{}: {e}", path.display()))
        }
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub tool_version: String,
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub master_seed: u64,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub wall_clock_seconds: f64,
    pub workers: usize,
}

impl ExperimentManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn read(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let f = open_input(path)?;
    serde_json::from_reader(std::io::BufReader::new(f)).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// Flat key=value configuration. Blank lines and lines starting with '#'
/// are ignored; a key given twice is a conflict.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got {line:?}", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", i + 1)));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::Config(format!("line {}: key {k:?} given twice", i + 1)));
        }
    }
    Ok(out)
}

pub fn read_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let mut text = String::new();
    open_input(path)?.read_to_string(&mut text)?;
    parse_config(&text)
}

/// Serializes rows of a serde-serializable type as CSV with a header.
pub fn write_csv<T: Serialize, W: Write>(rows: &[T], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let f = open_input(path)?;
    csv::Reader::from_reader(f)
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}
