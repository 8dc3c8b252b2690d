use serde::{Deserialize, Serialize};

use crate::embed::DEFAULT_DIM;
use crate::error::{Error, Result};

/// Bounds that keep the closed-form parameter count far from overflow.
pub const MAX_WIDTH: usize = 1 << 20;
pub const MAX_LAYERS: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub d: usize,
    pub heads: usize,
    pub layers: usize,
    pub ffn_dim: usize,
    pub mlp_hidden1: usize,
    pub mlp_hidden2: usize,
    pub dropout: f64,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::with_dim(DEFAULT_DIM)
    }
}

impl ModelConfig {
    /// Default shape for embedding width `d`: feed-forward `d`, head `2d -> d`.
    pub fn with_dim(d: usize) -> Self {
        ModelConfig {
            d,
            heads: 4,
            layers: 1,
            ffn_dim: d,
            mlp_hidden1: 2 * d,
            mlp_hidden2: d,
            dropout: 0.1,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.d == 0 || self.ffn_dim == 0 || self.mlp_hidden1 == 0 || self.mlp_hidden2 == 0 {
            return fail("all widths must be positive".into());
        }
        if self.heads == 0 || !self.d.is_multiple_of(self.heads) {
            return fail(format!("d = {} is not divisible by heads = {}", self.d, self.heads));
        }
        if self.layers == 0 {
            return fail("layers must be at least 1".into());
        }
        let widest = [self.d, self.ffn_dim, self.mlp_hidden1, self.mlp_hidden2, self.heads]
            .into_iter()
            .max()
            .unwrap();
        if widest > MAX_WIDTH || self.layers > MAX_LAYERS {
            return fail(format!("widths are capped at {MAX_WIDTH} and layers at {MAX_LAYERS}"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail(format!("dropout {} outside [0, 1)", self.dropout));
        }
        Ok(())
    }

    /// Width of the phase/drug/disease/inclusion/exclusion concatenation.
    pub fn concat_dim(&self) -> usize {
        4 + 4 * self.d
    }

    pub fn head_dim(&self) -> usize {
        self.d / self.heads
    }

    /// Closed-form parameter count.
    pub fn param_count(&self) -> usize {
        let (d, f) = (self.d, self.ffn_dim);
        let per_layer = 4 * (d * d + d) + (d * f + f) + (f * d + d) + 4 * d;
        let head = mlp_head_count(self.concat_dim(), self.mlp_hidden1, self.mlp_hidden2);
        d + self.layers * per_layer + head
    }
}

pub(crate) fn mlp_head_count(input: usize, h1: usize, h2: usize) -> usize {
    input * h1 + h1 + h1 * h2 + h2 + h2 + 1
}
