use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hexfloat;

/// `(potential hash, n, k, δ bits)`.
pub type CacheKey = (String, u32, usize, u64);

/// One mesh evaluation of `C_k/|Λ_n|` at a fixed `δ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelValue {
    pub value: f64,
    /// Certified bound at this `δ`.
    pub error_bound: f64,
    pub point_count: u128,
}

#[derive(Serialize, Deserialize)]
struct Record {
    potential: String,
    n: u32,
    k: usize,
    #[serde(with = "hexfloat::serde_f64")]
    delta: f64,
    #[serde(with = "hexfloat::serde_f64")]
    value: f64,
    #[serde(with = "hexfloat::serde_f64")]
    error_bound: f64,
    point_count: String,
}

/// Insert-once store of mesh evaluations, optionally backed by a
/// line-delimited JSON file that new records are appended to.
#[derive(Debug, Default)]
pub struct CoefficientCache {
    path: Option<PathBuf>,
    entries: Mutex<BTreeMap<CacheKey, LevelValue>>,
}

impl CoefficientCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Load `path` if it exists; later inserts are appended to it.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut entries = BTreeMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for (lineno, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let r: Record = serde_json::from_str(&line)
                    .map_err(|e| Error::input(format!("{}:{}: bad cache record: {e}", path.display(), lineno + 1)))?;
                let points = r
                    .point_count
                    .parse()
                    .map_err(|_| Error::input(format!("{}:{}: bad point count", path.display(), lineno + 1)))?;
                entries
                    .entry((r.potential, r.n, r.k, r.delta.to_bits()))
                    .or_insert(LevelValue { value: r.value, error_bound: r.error_bound, point_count: points });
            }
        }
        Ok(CoefficientCache { path: Some(path), entries: Mutex::new(entries) })
    }

    pub fn get(&self, key: &CacheKey) -> Option<LevelValue> {
        self.entries.lock().unwrap().get(key).copied()
    }

    /// Store `value` unless the key is present; returns the stored entry.
    pub fn insert(&self, key: CacheKey, value: LevelValue) -> Result<LevelValue> {
        let mut map = self.entries.lock().unwrap();
        if let Some(existing) = map.get(&key) {
            return Ok(*existing);
        }
        if let Some(path) = &self.path {
            let record = Record {
                potential: key.0.clone(),
                n: key.1,
                k: key.2,
                delta: f64::from_bits(key.3),
                value: value.value,
                error_bound: value.error_bound,
                point_count: value.point_count.to_string(),
            };
            let mut f = OpenOptions::new().create(true).append(true).open(path)?;
            writeln!(f, "{}", serde_json::to_string(&record)?)?;
        }
        map.insert(key, value);
        Ok(value)
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
