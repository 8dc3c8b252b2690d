//! Numeric features for a trial: phase one-hot, set-mean drug and disease
//! vectors, and a padded per-sentence matrix.

mod cache;
mod hashed;

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use cache::{normalize_key, CachedEmbedder, CACHE_FORMAT};
pub use hashed::HashedEmbedder;

use crate::error::{Error, Result};
use crate::ingest::{Phase, TrialRecord};

/// Sentence slots per criteria segment.
pub const MAX_SENTENCES: usize = 32;
/// Inclusion block followed by exclusion block.
pub const SENTENCE_SLOTS: usize = 2 * MAX_SENTENCES;
pub const DEFAULT_DIM: usize = 768;

/// How to construct an [`EmbeddingProvider`]; recorded in model artifacts so
/// inference embeds text the same way training did.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProviderSpec {
    Hashed { dim: usize, seed: u64 },
    Cache { path: PathBuf },
}

impl ProviderSpec {
    pub fn build(&self) -> Result<EmbeddingProvider> {
        match self {
            ProviderSpec::Hashed { dim, seed } => {
                if *dim == 0 {
                    return Err(Error::Config("embedding dim must be positive".into()));
                }
                Ok(EmbeddingProvider::Hashed(HashedEmbedder::new(*dim, *seed)))
            }
            ProviderSpec::Cache { path } => load_cache(path),
        }
    }
}

#[derive(Debug, Clone)]
pub enum EmbeddingProvider {
    Hashed(HashedEmbedder),
    Cache(CachedEmbedder),
}

impl EmbeddingProvider {
    pub fn hashed(dim: usize, seed: u64) -> Self {
        EmbeddingProvider::Hashed(HashedEmbedder::new(dim, seed))
    }

    pub fn dim(&self) -> usize {
        match self {
            EmbeddingProvider::Hashed(h) => h.dim(),
            EmbeddingProvider::Cache(c) => c.dim(),
        }
    }

    pub fn embed(&self, text: &str) -> Result<Vec<f64>> {
        match self {
            EmbeddingProvider::Hashed(h) => Ok(h.embed(text)),
            EmbeddingProvider::Cache(c) => c.embed(text),
        }
    }
}

pub fn load_cache(path: &Path) -> Result<EmbeddingProvider> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    CachedEmbedder::read(BufReader::new(file)).map(EmbeddingProvider::Cache)
}

pub fn phase_onehot(phase: i64) -> Result<[f64; 4]> {
    let phase = Phase::new(phase)?;
    let mut v = [0.0; 4];
    v[phase.index()] = 1.0;
    Ok(v)
}

/// Arithmetic mean of the vectors of `names`.
///
/// Names are summed in sorted order so the result is bit-identical under any
/// permutation of the input.
pub fn embed_set(provider: &EmbeddingProvider, names: &[String]) -> Result<Vec<f64>> {
    if names.is_empty() {
        return Err(Error::Invalid("cannot embed an empty name set".into()));
    }
    let mut ordered: Vec<&String> = names.iter().collect();
    ordered.sort();
    let mut acc = vec![0.0; provider.dim()];
    for name in ordered {
        for (a, x) in acc.iter_mut().zip(provider.embed(name)?) {
            *a += x;
        }
    }
    let k = names.len() as f64;
    acc.iter_mut().for_each(|a| *a /= k);
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Segment {
    Inclusion,
    Exclusion,
}

impl Segment {
    pub fn of_slot(slot: usize) -> Segment {
        if slot < MAX_SENTENCES {
            Segment::Inclusion
        } else {
            Segment::Exclusion
        }
    }
}

/// Model-ready features for one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedTrial {
    pub nct_id: String,
    pub phase: Phase,
    pub dim: usize,
    pub phase_onehot: [f64; 4],
    pub drug_vec: Vec<f64>,
    pub disease_vec: Vec<f64>,
    /// Row-major `SENTENCE_SLOTS x dim`.
    pub sentences: Vec<f64>,
    pub mask: Vec<bool>,
    pub segment: Vec<Segment>,
    pub label: Option<f64>,
}

impl EmbeddedTrial {
    pub fn sentence(&self, slot: usize) -> &[f64] {
        &self.sentences[slot * self.dim..(slot + 1) * self.dim]
    }

    pub fn sentence_mut(&mut self, slot: usize) -> &mut [f64] {
        &mut self.sentences[slot * self.dim..(slot + 1) * self.dim]
    }

    /// Slots holding a real sentence, in order.
    pub fn active_slots(&self) -> Vec<usize> {
        (0..SENTENCE_SLOTS).filter(|&s| self.mask[s]).collect()
    }

    /// Clears a slot: mask off and zero row.
    pub fn mask_slot(&mut self, slot: usize) {
        self.mask[slot] = false;
        self.sentence_mut(slot).iter_mut().for_each(|x| *x = 0.0);
    }

    pub fn check_shape(&self, dim: usize) -> Result<()> {
        let dims = [
            ("drug_vec", self.drug_vec.len(), dim),
            ("disease_vec", self.disease_vec.len(), dim),
            ("sentences", self.sentences.len(), SENTENCE_SLOTS * dim),
            ("mask", self.mask.len(), SENTENCE_SLOTS),
            ("segment", self.segment.len(), SENTENCE_SLOTS),
        ];
        for (what, got, expected) in dims {
            if got != expected {
                return Err(Error::Dimension {
                    what: what.into(),
                    expected,
                    got,
                });
            }
        }
        if self.dim != dim {
            return Err(Error::Dimension {
                what: "trial dim".into(),
                expected: dim,
                got: self.dim,
            });
        }
        Ok(())
    }
}

/// Slot assignment of a record's sentences: `(slot, index into record.criteria())`.
/// Sentences beyond [`MAX_SENTENCES`] per segment are dropped.
pub fn slot_layout(record: &TrialRecord) -> Vec<(usize, usize)> {
    let q = record.inclusion.len();
    let inc = (0..q.min(MAX_SENTENCES)).map(|i| (i, i));
    let exc = (0..record.exclusion.len().min(MAX_SENTENCES)).map(move |j| (MAX_SENTENCES + j, q + j));
    inc.chain(exc).collect()
}

pub fn build_features(provider: &EmbeddingProvider, record: &TrialRecord) -> Result<EmbeddedTrial> {
    let dim = provider.dim();
    let mut sentences = vec![0.0; SENTENCE_SLOTS * dim];
    let mut mask = vec![false; SENTENCE_SLOTS];
    let criteria: Vec<&str> = record.criteria().collect();
    for (slot, idx) in slot_layout(record) {
        let v = provider.embed(criteria[idx])?;
        sentences[slot * dim..(slot + 1) * dim].copy_from_slice(&v);
        mask[slot] = true;
    }
    Ok(EmbeddedTrial {
        nct_id: record.nct_id.clone(),
        phase: record.phase,
        dim,
        phase_onehot: phase_onehot(record.phase.get().into())?,
        drug_vec: embed_set(provider, &record.drugs)?,
        disease_vec: embed_set(provider, &record.diseases)?,
        sentences,
        mask,
        segment: (0..SENTENCE_SLOTS).map(Segment::of_slot).collect(),
        label: Some(record.duration_years),
    })
}
