use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::layout::{Layout, TensorSlot};
use crate::embed::ProviderSpec;
use crate::error::{Error, Result};

pub const PARAM_ORDER: &str = "canonical-v1";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const PARAMS_FILE: &str = "params.f32";

/// Every learnable value of the network, flat in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub values: Vec<f64>,
}

/// Glorot-uniform bound for a `fan_in x fan_out` weight.
pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

enum InitKind {
    Glorot(usize, usize),
    Zero,
    One,
}

fn init_kind(name: &str, slot: &TensorSlot) -> InitKind {
    let last = name.rsplit('.').next().unwrap_or(name);
    if last == "cls" {
        InitKind::Glorot(1, slot.cols)
    } else if last.ends_with("_gain") {
        InitKind::One
    } else if last.ends_with("_bias") || last.starts_with('b') || last.starts_with("ffn_b") {
        InitKind::Zero
    } else {
        InitKind::Glorot(slot.rows, slot.cols)
    }
}

/// Draws every tensor in canonical order from a ChaCha8 stream seeded by
/// `config.seed`.
pub fn init_params(config: &ModelConfig) -> Result<ModelParams> {
    config.validate()?;
    let layout = Layout::new(config);
    let mut values = vec![0.0; layout.total];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for (name, slot) in layout.tensors() {
        fill(&mut values[slot.range()], init_kind(name, slot), &mut rng);
    }
    Ok(ModelParams {
        config: config.clone(),
        values,
    })
}

fn fill<R: Rng>(out: &mut [f64], kind: InitKind, rng: &mut R) {
    match kind {
        InitKind::Zero => out.fill(0.0),
        InitKind::One => out.fill(1.0),
        InitKind::Glorot(i, o) => {
            let b = glorot_bound(i, o);
            out.iter_mut().for_each(|v| *v = rng.random_range(-b..b));
        }
    }
}

/// Glorot weights and zero biases for a plain MLP head laid out by `layout`.
pub(crate) fn init_head<R: Rng>(layout: &super::layout::HeadLayout, values: &mut [f64], rng: &mut R) {
    for w in layout.weights() {
        fill(&mut values[w.range()], InitKind::Glorot(w.rows, w.cols), rng);
    }
    for b in [layout.b1, layout.b2, layout.b3] {
        values[b.range()].fill(0.0);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub config: ModelConfig,
    pub seed: u64,
    pub param_count: usize,
    pub order: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provider: Option<ProviderSpec>,
}

impl CheckpointManifest {
    pub fn parse(text: &str) -> Result<Self> {
        let m: CheckpointManifest = serde_json::from_str(text)?;
        if m.order != PARAM_ORDER {
            return Err(Error::Format(format!("unknown parameter order {:?}", m.order)));
        }
        m.config.validate()?;
        let expected = m.config.param_count();
        if m.param_count != expected {
            return Err(Error::Format(format!(
                "manifest declares {} parameters, config implies {expected}",
                m.param_count
            )));
        }
        Ok(m)
    }
}

pub fn encode_f32_le(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| (*v as f32).to_le_bytes()).collect()
}

/// Decodes a little-endian f32 array of exactly `count` finite values.
pub fn decode_f32_le(bytes: &[u8], count: usize) -> Result<Vec<f64>> {
    if count.checked_mul(4) != Some(bytes.len()) {
        return Err(Error::Format(format!(
            "parameter file has {} bytes, expected {} ({count} float32 values)",
            bytes.len(),
            count as u128 * 4
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
        .collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Format(format!("parameter {i} is not finite")));
    }
    Ok(values)
}

pub fn save_checkpoint(dir: &Path, params: &ModelParams, provider: Option<&ProviderSpec>) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = CheckpointManifest {
        config: params.config.clone(),
        seed: params.config.seed,
        param_count: params.values.len(),
        order: PARAM_ORDER.into(),
        provider: provider.cloned(),
    };
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    let path = dir.join(PARAMS_FILE);
    fs::write(&path, encode_f32_le(&params.values)).map_err(|e| Error::io(&path, e))
}

pub fn load_checkpoint(dir: &Path) -> Result<(ModelParams, CheckpointManifest)> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest = CheckpointManifest::parse(&text)?;
    let path = dir.join(PARAMS_FILE);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let values = decode_f32_le(&bytes, manifest.param_count)?;
    Ok((
        ModelParams {
            config: manifest.config.clone(),
            values,
        },
        manifest,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_init() {
        let mut c = ModelConfig::with_dim(16);
        c.heads = 2;
        let a = init_params(&c).unwrap();
        let b = init_params(&c).unwrap();
        assert_eq!(a, b);
        c.seed = 1;
        assert_ne!(init_params(&c).unwrap().values, a.values);
    }

    #[test]
    fn init_respects_kinds_and_bounds() {
        let c = ModelConfig::with_dim(16);
        let p = init_params(&c).unwrap();
        let layout = Layout::new(&c);
        let bl = &layout.blocks[0];
        let wq = &p.values[bl.wq.range()];
        let bound = glorot_bound(16, 16);
        assert_eq!(bound, (6.0f64 / 32.0).sqrt());
        assert!(wq.iter().all(|v| v.abs() < bound));
        assert!(wq.iter().any(|v| v.abs() > bound / 2.0));
        assert!(p.values[bl.bq.range()].iter().all(|v| *v == 0.0));
        assert!(p.values[bl.ln1_gain.range()].iter().all(|v| *v == 1.0));
        assert!(p.values[bl.ln2_bias.range()].iter().all(|v| *v == 0.0));
        assert!(p.values[layout.head.b3.range()].iter().all(|v| *v == 0.0));
        let w1 = &p.values[layout.head.w1.range()];
        assert!(w1.iter().all(|v| v.abs() < glorot_bound(68, 32)));
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = init_params(&ModelConfig::with_dim(8)).unwrap();
        let spec = ProviderSpec::Hashed { dim: 8, seed: 3 };
        save_checkpoint(dir.path(), &p, Some(&spec)).unwrap();
        let (back, manifest) = load_checkpoint(dir.path()).unwrap();
        assert_eq!(manifest.provider, Some(spec));
        assert_eq!(back.values.len(), p.values.len());
        for (a, b) in back.values.iter().zip(&p.values) {
            assert_eq!(*a, f64::from(*b as f32));
        }
    }

    #[test]
    fn truncated_params_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = init_params(&ModelConfig::with_dim(8)).unwrap();
        save_checkpoint(dir.path(), &p, None).unwrap();
        let path = dir.path().join(PARAMS_FILE);
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 4]).unwrap();
        assert!(matches!(load_checkpoint(dir.path()), Err(Error::Format(_))));
    }

    #[test]
    fn manifest_count_mismatch() {
        let c = ModelConfig::with_dim(8);
        let m = CheckpointManifest {
            config: c.clone(),
            seed: 0,
            param_count: c.param_count() + 1,
            order: PARAM_ORDER.into(),
            provider: None,
        };
        let text = serde_json::to_string(&m).unwrap();
        assert!(CheckpointManifest::parse(&text).is_err());
    }
}
