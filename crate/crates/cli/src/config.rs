use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tdur_core::baselines::{GbdtConfig, DEFAULT_LAMBDA};
use tdur_core::embed::{ProviderSpec, DEFAULT_DIM};
use tdur_core::encoder::ModelConfig;
use tdur_core::eval::DEFAULT_RESAMPLES;
use tdur_core::ingest::default_cutoff;
use tdur_core::train::TrainConfig;

use crate::error::CliError;

/// Everything a run needs besides file paths, as one JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub provider: ProviderSpec,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub gbdt: GbdtConfig,
    pub ridge_lambda: f64,
    pub cutoff: NaiveDate,
    pub seeds: Vec<u64>,
    pub n_boot: usize,
    pub bootstrap_seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            provider: ProviderSpec::Hashed {
                dim: DEFAULT_DIM,
                seed: 0,
            },
            model: ModelConfig::with_dim(DEFAULT_DIM),
            train: TrainConfig::default(),
            gbdt: GbdtConfig::default(),
            ridge_lambda: DEFAULT_LAMBDA,
            cutoff: default_cutoff(),
            seeds: vec![0, 1, 2, 3, 4],
            n_boot: DEFAULT_RESAMPLES,
            bootstrap_seed: 0,
        }
    }
}

impl RunConfig {
    /// Defaults, then the optional file, then `--dim`, then each `key=value`
    /// override in order. Keys are dotted paths into the JSON document, for
    /// example `train.lr=0.0005` or `model.heads=2`; values parse as JSON and
    /// fall back to a plain string.
    pub fn resolve(file: Option<&Path>, dim: Option<usize>, overrides: &[String]) -> Result<Self, CliError> {
        let mut config = match file {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))?
            }
            None => RunConfig::default(),
        };
        if let Some(d) = dim {
            config.set_dim(d);
        }
        if !overrides.is_empty() {
            let mut doc = serde_json::to_value(&config).map_err(|e| CliError::usage(e.to_string()))?;
            for o in overrides {
                apply_override(&mut doc, o)?;
            }
            config = serde_json::from_value(doc).map_err(|e| CliError::usage(format!("invalid override: {e}")))?;
        }
        config.validate()?;
        Ok(config)
    }

    /// Sets the hashed embedding width and resets model widths to match.
    pub fn set_dim(&mut self, d: usize) {
        let (heads, layers, dropout, seed) = (self.model.heads, self.model.layers, self.model.dropout, self.model.seed);
        self.model = ModelConfig::with_dim(d);
        self.model.layers = layers;
        self.model.dropout = dropout;
        self.model.seed = seed;
        if d.is_multiple_of(heads) {
            self.model.heads = heads;
        }
        if let ProviderSpec::Hashed { dim, .. } = &mut self.provider {
            *dim = d;
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.model.validate()?;
        self.train.validate()?;
        self.gbdt.validate()?;
        if self.seeds.is_empty() {
            return Err(CliError::usage("seeds must not be empty"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(CliError::usage("seeds must be distinct"));
        }
        if self.ridge_lambda.is_nan() || self.ridge_lambda < 0.0 {
            return Err(CliError::usage("ridge_lambda must be >= 0"));
        }
        Ok(())
    }
}

fn apply_override(doc: &mut Value, spec: &str) -> Result<(), CliError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::usage(format!("override {spec:?} is not key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::usage(format!("{key}: {part:?} is not inside an object")))?;
        if i + 1 == parts.len() {
            if !obj.contains_key(*part) {
                return Err(CliError::usage(format!("unknown config key {key:?}")));
            }
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj
            .get_mut(*part)
            .ok_or_else(|| CliError::usage(format!("unknown config key {key:?}")))?;
    }
    Ok(())
}
