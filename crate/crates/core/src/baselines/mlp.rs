use ndarray::ArrayView1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::FlatExample;
use crate::encoder::init_head;
use crate::encoder::{head_backward, head_forward, mlp_head_count, Allocator, Dropout, HeadLayout, ModelConfig};
use crate::error::{Error, Result};
use crate::train::Trainable;

/// The attention model's MLP head with no transformer in front of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatMlpConfig {
    pub input_dim: usize,
    pub mlp_hidden1: usize,
    pub mlp_hidden2: usize,
    pub dropout: f64,
    pub seed: u64,
}

impl FlatMlpConfig {
    pub fn from_model(config: &ModelConfig) -> Self {
        FlatMlpConfig {
            input_dim: config.concat_dim(),
            mlp_hidden1: config.mlp_hidden1,
            mlp_hidden2: config.mlp_hidden2,
            dropout: config.dropout,
            seed: config.seed,
        }
    }

    pub fn param_count(&self) -> usize {
        mlp_head_count(self.input_dim, self.mlp_hidden1, self.mlp_hidden2)
    }
}

pub struct FlatMlp {
    config: FlatMlpConfig,
    layout: HeadLayout,
}

impl FlatMlp {
    pub fn new(config: FlatMlpConfig) -> Result<Self> {
        if config.input_dim == 0 || config.mlp_hidden1 == 0 || config.mlp_hidden2 == 0 {
            return Err(Error::Config("flat MLP widths must be positive".into()));
        }
        if !(0.0..1.0).contains(&config.dropout) {
            return Err(Error::Config(format!(
                "dropout must be in [0, 1), got {}",
                config.dropout
            )));
        }
        let mut alloc = Allocator::default();
        let layout = HeadLayout::allocate(&mut alloc, config.input_dim, config.mlp_hidden1, config.mlp_hidden2);
        Ok(FlatMlp { config, layout })
    }

    pub fn config(&self) -> &FlatMlpConfig {
        &self.config
    }

    pub fn init(&self) -> Vec<f64> {
        let mut values = vec![0.0; self.config.param_count()];
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        init_head(&self.layout, &mut values, &mut rng);
        values
    }

    fn check(&self, params: &[f64], x: &[f64]) -> Result<()> {
        if params.len() != self.config.param_count() {
            return Err(Error::Dimension {
                what: "flat MLP parameters".into(),
                expected: self.config.param_count(),
                got: params.len(),
            });
        }
        if x.len() != self.config.input_dim {
            return Err(Error::Dimension {
                what: "flat MLP input".into(),
                expected: self.config.input_dim,
                got: x.len(),
            });
        }
        Ok(())
    }
}

impl Trainable for FlatMlp {
    type Example = FlatExample;

    fn param_count(&self) -> usize {
        self.config.param_count()
    }

    fn dropout_rate(&self) -> f64 {
        self.config.dropout
    }

    fn target(&self, example: &FlatExample) -> Result<f64> {
        example
            .y
            .ok_or_else(|| Error::Invalid(format!("{} has no duration label", example.nct_id)))
    }

    fn predict(&self, params: &[f64], example: &FlatExample, dropout: Option<&mut Dropout>) -> Result<f64> {
        self.check(params, &example.x)?;
        let (pred, _) = head_forward(&self.layout, params, ArrayView1::from(&example.x), dropout);
        if !pred.is_finite() {
            return Err(Error::NonFinite("flat MLP output".into()));
        }
        Ok(pred)
    }

    fn accumulate(
        &self,
        params: &[f64],
        example: &FlatExample,
        dropout: Option<&mut Dropout>,
        upstream: impl FnOnce(f64) -> f64,
        grads: &mut [f64],
    ) -> Result<f64> {
        self.check(params, &example.x)?;
        let (pred, cache) = head_forward(&self.layout, params, ArrayView1::from(&example.x), dropout);
        if !pred.is_finite() {
            return Err(Error::NonFinite("flat MLP output".into()));
        }
        head_backward(&self.layout, params, &cache, upstream(pred), grads);
        Ok(pred)
    }
}
