//! Reference regressors over flattened trial features: the training mean,
//! ridge regression, gradient-boosted trees and a plain MLP.

mod features;
mod gbdt;
mod linalg;
mod mlp;
mod ridge;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use features::{flat_features, FlatExample};
pub use gbdt::{gbdt_fit, GbdtConfig, GbdtModel, Node};
pub use linalg::cholesky_solve;
pub use mlp::{FlatMlp, FlatMlpConfig};
pub use ridge::{ridge_fit, Ridge, DEFAULT_LAMBDA};

use crate::embed::ProviderSpec;
use crate::error::{Error, Result};
use crate::train::{fit, TrainConfig, Trainable};

pub const BASELINE_FORMAT: &str = "tdbase-v1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanModel {
    pub value: f64,
}

pub fn mean_fit(train_y: &[f64]) -> Result<MeanModel> {
    if train_y.is_empty() {
        return Err(Error::EmptyDataset("mean predictor needs at least one target".into()));
    }
    crate::error::ensure_finite("targets", train_y)?;
    Ok(MeanModel {
        value: train_y.iter().sum::<f64>() / train_y.len() as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub config: FlatMlpConfig,
    pub params: Vec<f64>,
}

/// Trains the flat MLP with the shared training loop.
pub fn mlp_fit(config: FlatMlpConfig, train_config: &TrainConfig, train: &[FlatExample]) -> Result<MlpModel> {
    let net = FlatMlp::new(config.clone())?;
    let result = fit(&net, net.init(), train, None, train_config)?;
    Ok(MlpModel {
        config,
        params: result.params,
    })
}

/// A fitted baseline, serialised with a `kind` tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Baseline {
    Mean(MeanModel),
    Ridge(Ridge),
    Gbdt(GbdtModel),
    Mlp(MlpModel),
}

impl Baseline {
    pub fn name(&self) -> &'static str {
        match self {
            Baseline::Mean(_) => "mean",
            Baseline::Ridge(_) => "ridge",
            Baseline::Gbdt(_) => "gbdt",
            Baseline::Mlp(_) => "mlp",
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        match self {
            Baseline::Mean(m) => Ok(m.value),
            Baseline::Ridge(r) => r.predict(x),
            Baseline::Gbdt(g) => g.predict(x),
            Baseline::Mlp(m) => {
                let net = FlatMlp::new(m.config.clone())?;
                let ex = FlatExample {
                    nct_id: String::new(),
                    phase: crate::ingest::Phase::ALL[0],
                    x: x.to_vec(),
                    y: None,
                };
                net.predict(&m.params, &ex, None)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineArtifact {
    pub format: String,
    /// Embedder the features were built with.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provider: Option<ProviderSpec>,
    pub model: Baseline,
}

pub fn save_baseline(path: &Path, model: &Baseline, provider: Option<&ProviderSpec>) -> Result<()> {
    let artifact = BaselineArtifact {
        format: BASELINE_FORMAT.into(),
        provider: provider.cloned(),
        model: model.clone(),
    };
    let text = serde_json::to_string_pretty(&artifact)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_baseline(path: &Path) -> Result<BaselineArtifact> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let artifact: BaselineArtifact = serde_json::from_str(&text)?;
    if artifact.format != BASELINE_FORMAT {
        return Err(Error::Format(format!("unknown baseline format {:?}", artifact.format)));
    }
    Ok(artifact)
}

pub fn targets(examples: &[FlatExample]) -> Result<Vec<f64>> {
    examples
        .iter()
        .map(|e| {
            e.y.ok_or_else(|| Error::Invalid(format!("{} has no duration label", e.nct_id)))
        })
        .collect()
}

pub fn design(examples: &[FlatExample]) -> Vec<Vec<f64>> {
    examples.iter().map(|e| e.x.clone()).collect()
}
