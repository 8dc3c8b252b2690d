use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbdtConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        GbdtConfig {
            n_trees: 200,
            max_depth: 3,
            learning_rate: 0.1,
            min_samples_leaf: 5,
        }
    }
}

impl GbdtConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 || self.max_depth == 0 || self.min_samples_leaf == 0 {
            return Err(Error::Config(
                "gbdt n_trees, max_depth and min_samples_leaf must be at least 1".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::Config(format!(
                "gbdt learning_rate must be in (0, 1], got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    /// Values `<= threshold` go left.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature] <= *threshold { left } else { right },
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub config: GbdtConfig,
    pub n_features: usize,
    pub init: f64,
    pub trees: Vec<Node>,
}

impl GbdtModel {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::Dimension {
                what: "gbdt input".into(),
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(self.init + self.config.learning_rate * self.trees.iter().map(|t| t.eval(x)).sum::<f64>())
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Best split of `idx` on one feature: exact greedy over midpoints between
/// consecutive distinct values, first (lowest) threshold on ties.
fn best_on_feature(x: &[Vec<f64>], r: &[f64], idx: &[usize], feature: usize, min_leaf: usize) -> Option<Candidate> {
    let mut order: Vec<(f64, f64)> = idx.iter().map(|&i| (x[i][feature], r[i])).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = order.len();
    let total: f64 = order.iter().map(|p| p.1).sum();
    let base = total * total / n as f64;
    let mut left = 0.0;
    let mut best: Option<Candidate> = None;
    for k in 1..n {
        left += order[k - 1].1;
        if order[k - 1].0 == order[k].0 || k < min_leaf || n - k < min_leaf {
            continue;
        }
        let right = total - left;
        let gain = left * left / k as f64 + right * right / (n - k) as f64 - base;
        if best.is_none_or(|b| gain > b.gain) {
            best = Some(Candidate {
                feature,
                threshold: 0.5 * (order[k - 1].0 + order[k].0),
                gain,
            });
        }
    }
    best
}

fn grow(x: &[Vec<f64>], r: &[f64], idx: Vec<usize>, depth: usize, config: &GbdtConfig) -> Node {
    let mean = idx.iter().map(|&i| r[i]).sum::<f64>() / idx.len() as f64;
    let leaf = Node::Leaf { value: mean };
    if depth == 0 || idx.len() < 2 * config.min_samples_leaf {
        return leaf;
    }
    let p = x[idx[0]].len();
    let per_feature: Vec<Option<Candidate>> = (0..p)
        .into_par_iter()
        .map(|f| best_on_feature(x, r, &idx, f, config.min_samples_leaf))
        .collect();
    // Sequential strict-greater scan: ties resolve to the lowest feature.
    let mut best: Option<Candidate> = None;
    for c in per_feature.into_iter().flatten() {
        if best.is_none_or(|b| c.gain > b.gain) {
            best = Some(c);
        }
    }
    let scale = idx.iter().map(|&i| (r[i] - mean).powi(2)).sum::<f64>();
    let Some(best) = best.filter(|b| b.gain > 1e-12 * scale.max(f64::MIN_POSITIVE) && b.gain > 0.0) else {
        return leaf;
    };
    let (li, ri): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x[i][best.feature] <= best.threshold);
    Node::Split {
        feature: best.feature,
        threshold: best.threshold,
        left: Box::new(grow(x, r, li, depth - 1, config)),
        right: Box::new(grow(x, r, ri, depth - 1, config)),
    }
}

/// Gradient boosting on squared error. Each tree fits the current
/// residuals; boosting stops early once a tree finds no useful split.
pub fn gbdt_fit(x: &[Vec<f64>], y: &[f64], config: &GbdtConfig) -> Result<GbdtModel> {
    config.validate()?;
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 * config.min_samples_leaf {
        return Err(Error::EmptyDataset(format!(
            "gbdt needs at least {} samples, got {}",
            2 * config.min_samples_leaf,
            x.len()
        )));
    }
    let n_features = x[0].len();
    for (i, row) in x.iter().enumerate() {
        if row.len() != n_features {
            return Err(Error::Dimension {
                what: format!("feature row {i}"),
                expected: n_features,
                got: row.len(),
            });
        }
        ensure_finite("features", row)?;
    }
    ensure_finite("targets", y)?;

    let init = y.iter().sum::<f64>() / y.len() as f64;
    let mut residual: Vec<f64> = y.iter().map(|v| v - init).collect();
    let mut trees = Vec::new();
    for _ in 0..config.n_trees {
        let tree = grow(x, &residual, (0..x.len()).collect(), config.max_depth, config);
        if matches!(tree, Node::Leaf { .. }) {
            break;
        }
        for (ri, xi) in residual.iter_mut().zip(x) {
            *ri -= config.learning_rate * tree.eval(xi);
        }
        trees.push(tree);
    }
    Ok(GbdtModel {
        config: *config,
        n_features,
        init,
        trees,
    })
}
