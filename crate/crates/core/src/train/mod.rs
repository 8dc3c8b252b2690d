//! Mean-squared-error training with Adam, gradient verification and run
//! artifacts.

mod adam;
mod fit;
mod gradient;
mod loss;

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use adam::{adam_step, AdamConfig, AdamState};
pub use fit::{fit, EpochStats, FitResult};
pub use gradient::{batch_gradient, finite_difference_check, predict_all, GradientCheck, Trainable, FD_ABS_FLOOR};
pub use loss::mse_loss;

use crate::embed::{build_features, EmbeddedTrial, EmbeddingProvider, ProviderSpec};
use crate::encoder::{init_params, save_checkpoint, HierNet, ModelConfig, ModelParams};
use crate::error::{Error, Result};
use crate::ingest::{Phase, TrialRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyStop {
    pub patience: usize,
    /// Latest-starting share of the training records held out for validation.
    pub validation_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f64,
    #[serde(flatten)]
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub epochs: usize,
    pub shuffle_seed: u64,
    pub phase_filter: Option<u8>,
    pub early_stop: Option<EarlyStop>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-3,
            adam: AdamConfig::default(),
            batch_size: 32,
            epochs: 200,
            shuffle_seed: 0,
            phase_filter: None,
            early_stop: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("lr must be positive, got {}", self.lr)));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if let Some(p) = self.phase_filter {
            Phase::new(p.into())?;
        }
        if let Some(es) = self.early_stop {
            if !(es.validation_fraction > 0.0 && es.validation_fraction < 1.0) {
                return Err(Error::Config("validation_fraction must be in (0, 1)".into()));
            }
        }
        Ok(())
    }
}

/// Records kept by the phase filter, then split into (train, validation)
/// with the latest-starting `validation_fraction` held out.
pub fn prepare_records(records: &[TrialRecord], config: &TrainConfig) -> Result<(Vec<TrialRecord>, Vec<TrialRecord>)> {
    let mut kept: Vec<TrialRecord> = records
        .iter()
        .filter(|r| config.phase_filter.is_none_or(|p| r.phase.get() == p))
        .cloned()
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyDataset(match config.phase_filter {
            Some(p) => format!("no training records with phase {p}"),
            None => "no training records".into(),
        }));
    }
    let Some(es) = config.early_stop else {
        return Ok((kept, Vec::new()));
    };
    kept.sort_by(|a, b| a.start_date.cmp(&b.start_date).then_with(|| a.nct_id.cmp(&b.nct_id)));
    let n_val = ((kept.len() as f64) * es.validation_fraction).round() as usize;
    let n_val = n_val.min(kept.len() - 1);
    let val = kept.split_off(kept.len() - n_val);
    Ok((kept, val))
}

pub fn embed_records(provider: &EmbeddingProvider, records: &[TrialRecord]) -> Result<Vec<EmbeddedTrial>> {
    records.par_iter().map(|r| build_features(provider, r)).collect()
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub best: Option<(usize, ModelParams)>,
    pub curve: Vec<EpochStats>,
    pub train_ids: Vec<String>,
}

/// Trains the attention model on labelled records.
pub fn train(
    model_config: &ModelConfig,
    train_config: &TrainConfig,
    records: &[TrialRecord],
    provider: &EmbeddingProvider,
) -> Result<TrainOutcome> {
    train_config.validate()?;
    if provider.dim() != model_config.d {
        return Err(Error::Dimension {
            what: "embedding dim vs model d".into(),
            expected: model_config.d,
            got: provider.dim(),
        });
    }
    let (train_records, val_records) = prepare_records(records, train_config)?;
    let net = HierNet::new(model_config.clone())?;
    let train_set = embed_records(provider, &train_records)?;
    let val_set = embed_records(provider, &val_records)?;
    let init = init_params(model_config)?;
    let result = fit(
        &net,
        init.values,
        &train_set,
        (!val_set.is_empty()).then_some(val_set.as_slice()),
        train_config,
    )?;
    let wrap = |values| ModelParams {
        config: model_config.clone(),
        values,
    };
    Ok(TrainOutcome {
        params: wrap(result.params),
        best: result.best.map(|(e, p)| (e, wrap(p))),
        curve: result.curve,
        train_ids: train_records.into_iter().map(|r| r.nct_id).collect(),
    })
}

pub fn write_loss_curve(path: &Path, curve: &[EpochStats]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["epoch", "train_mse", "val_mae"])?;
    for e in curve {
        w.write_record([
            e.epoch.to_string(),
            e.train_mse.to_string(),
            e.val_mae.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `final/`, `best/` (when validation ran) and `loss.csv` under `dir`.
pub fn write_outcome(dir: &Path, outcome: &TrainOutcome, provider: &ProviderSpec) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save_checkpoint(&dir.join("final"), &outcome.params, Some(provider))?;
    if let Some((_, best)) = &outcome.best {
        save_checkpoint(&dir.join("best"), best, Some(provider))?;
    }
    write_loss_curve(&dir.join("loss.csv"), &outcome.curve)
}
