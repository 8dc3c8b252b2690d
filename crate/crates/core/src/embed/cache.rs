use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

pub const CACHE_FORMAT: &str = "tdem-jsonl";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    dim: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    key: String,
    vec: Vec<f64>,
}

/// Lookup key: NFC-normalized with whitespace runs collapsed to one space.
pub fn normalize_key(text: &str) -> String {
    let nfc: String = text.nfc().collect();
    nfc.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Exact-match table of precomputed vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct CachedEmbedder {
    dim: usize,
    table: HashMap<String, Vec<f64>>,
}

impl CachedEmbedder {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn embed(&self, text: &str) -> Result<Vec<f64>> {
        let key = normalize_key(text);
        self.table.get(&key).cloned().ok_or(Error::MissingEmbedding(key))
    }

    pub fn from_entries<I>(dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, Vec<f64>)>,
    {
        let mut table = HashMap::new();
        for (key, vec) in entries {
            check_vector(&key, dim, &vec)?;
            let key = normalize_key(&key);
            if table.insert(key.clone(), vec).is_some() {
                return Err(Error::Format(format!("duplicate cache key {key:?}")));
            }
        }
        Ok(CachedEmbedder { dim, table })
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let header: Header = loop {
            match lines.next() {
                Some((_, line)) => {
                    let line = line.map_err(|e| Error::io("<embedding cache>", e))?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    break serde_json::from_str(&line).map_err(|e| Error::Format(format!("cache header: {e}")))?;
                }
                None => return Err(Error::Format("empty embedding cache".into())),
            }
        };
        if header.format != CACHE_FORMAT {
            return Err(Error::Format(format!(
                "cache format {:?}, expected {CACHE_FORMAT:?}",
                header.format
            )));
        }
        if header.dim == 0 {
            return Err(Error::Format("cache dim must be positive".into()));
        }
        let mut entries = Vec::new();
        for (lineno, line) in lines {
            let line = line.map_err(|e| Error::io("<embedding cache>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: Entry =
                serde_json::from_str(&line).map_err(|e| Error::Format(format!("cache line {}: {e}", lineno + 1)))?;
            entries.push((entry.key, entry.vec));
        }
        Self::from_entries(header.dim, entries)
    }

    /// Writes the cache with keys in sorted order.
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e| Error::io("<embedding cache>", e);
        serde_json::to_writer(
            &mut out,
            &Header {
                format: CACHE_FORMAT.into(),
                dim: self.dim,
            },
        )?;
        out.write_all(b"\n").map_err(io)?;
        let mut keys: Vec<&String> = self.table.keys().collect();
        keys.sort();
        for key in keys {
            serde_json::to_writer(
                &mut out,
                &Entry {
                    key: key.clone(),
                    vec: self.table[key].clone(),
                },
            )?;
            out.write_all(b"\n").map_err(io)?;
        }
        Ok(())
    }
}

fn check_vector(key: &str, dim: usize, vec: &[f64]) -> Result<()> {
    if vec.len() != dim {
        return Err(Error::Format(format!(
            "cache entry {key:?} has {} values, header dim is {dim}",
            vec.len()
        )));
    }
    if vec.iter().any(|x| !x.is_finite()) {
        return Err(Error::Format(format!("cache entry {key:?} has non-finite values")));
    }
    Ok(())
}
