use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::embed::EmbeddedTrial;
use crate::encoder::{Dropout, HierNet};
use crate::error::{Error, Result};

/// A scalar regressor whose parameters live in one flat vector.
pub trait Trainable: Sync {
    type Example: Sync;

    fn param_count(&self) -> usize;

    fn dropout_rate(&self) -> f64;

    fn target(&self, example: &Self::Example) -> Result<f64>;

    fn predict(&self, params: &[f64], example: &Self::Example, dropout: Option<&mut Dropout>) -> Result<f64>;

    /// Adds `dL/dθ` into `grads`, where `upstream(ŷ) = dL/dŷ`; returns ŷ.
    fn accumulate(
        &self,
        params: &[f64],
        example: &Self::Example,
        dropout: Option<&mut Dropout>,
        upstream: impl FnOnce(f64) -> f64,
        grads: &mut [f64],
    ) -> Result<f64>;
}

impl Trainable for HierNet {
    type Example = EmbeddedTrial;

    fn param_count(&self) -> usize {
        HierNet::param_count(self)
    }

    fn dropout_rate(&self) -> f64 {
        self.config().dropout
    }

    fn target(&self, example: &EmbeddedTrial) -> Result<f64> {
        example
            .label
            .ok_or_else(|| Error::Invalid(format!("{} has no duration label", example.nct_id)))
    }

    fn predict(&self, params: &[f64], example: &EmbeddedTrial, dropout: Option<&mut Dropout>) -> Result<f64> {
        self.forward(params, example, dropout)
    }

    fn accumulate(
        &self,
        params: &[f64],
        example: &EmbeddedTrial,
        dropout: Option<&mut Dropout>,
        upstream: impl FnOnce(f64) -> f64,
        grads: &mut [f64],
    ) -> Result<f64> {
        self.forward_backward(params, example, dropout, upstream, grads)
    }
}

/// Examples per sequential work unit. Fixed, so the reduction order (and the
/// floating-point result) does not depend on the thread count.
const CHUNK: usize = 4;

/// Mean squared error over `batch` and its exact gradient.
///
/// With `dropout_seed`, each example gets its own mask stream derived from
/// the seed; without it, dropout is off.
pub fn batch_gradient<M: Trainable>(
    model: &M,
    params: &[f64],
    batch: &[M::Example],
    dropout_seed: Option<u64>,
) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::EmptyDataset("empty batch".into()));
    }
    let n = batch.len() as f64;
    let seeds: Option<Vec<u64>> = dropout_seed.map(|s| {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        batch.iter().map(|_| rng.next_u64()).collect()
    });
    let rate = model.dropout_rate();

    let partials: Vec<Result<(f64, Vec<f64>)>> = batch
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let mut grads = vec![0.0; model.param_count()];
            let mut loss = 0.0;
            for (k, ex) in chunk.iter().enumerate() {
                let y = model.target(ex)?;
                let mut dropout = seeds.as_ref().map(|s| Dropout::new(rate, s[c * CHUNK + k]));
                let pred = model.accumulate(params, ex, dropout.as_mut(), |p| 2.0 * (p - y) / n, &mut grads)?;
                loss += (pred - y) * (pred - y) / n;
            }
            Ok((loss, grads))
        })
        .collect();

    let mut loss = 0.0;
    let mut grads = vec![0.0; model.param_count()];
    for part in partials {
        let (l, g) = part?;
        loss += l;
        grads.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
    }
    Ok((loss, grads))
}

/// Inference-mode predictions, in input order.
pub fn predict_all<M: Trainable>(model: &M, params: &[f64], examples: &[M::Example]) -> Result<Vec<f64>> {
    examples.par_iter().map(|e| model.predict(params, e, None)).collect()
}

#[derive(Debug, Clone)]
pub struct GradientCheck {
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
}

/// Gradient magnitudes below this are compared on an absolute scale; central
/// differences cannot resolve relative error on values this small.
pub const FD_ABS_FLOOR: f64 = 1e-7;

/// Compares analytic gradients with central differences of step `h` for every
/// parameter, dropout off. Relative error is `|a - n| / max(|a|, |n|, FD_ABS_FLOOR)`.
pub fn finite_difference_check<M: Trainable>(
    model: &M,
    params: &[f64],
    batch: &[M::Example],
    h: f64,
) -> Result<GradientCheck> {
    let (_, analytic) = batch_gradient(model, params, batch, None)?;
    let loss_at = |p: &[f64]| -> Result<f64> {
        let mut acc = 0.0;
        for ex in batch {
            let y = model.target(ex)?;
            let pred = model.predict(p, ex, None)?;
            acc += (pred - y) * (pred - y);
        }
        Ok(acc / batch.len() as f64)
    };
    let results: Vec<Result<(usize, f64, f64)>> = (0..params.len())
        .into_par_iter()
        .map(|i| {
            let mut p = params.to_vec();
            p[i] = params[i] + h;
            let up = loss_at(&p)?;
            p[i] = params[i] - h;
            let down = loss_at(&p)?;
            Ok((i, analytic[i], (up - down) / (2.0 * h)))
        })
        .collect();
    let mut worst = GradientCheck {
        max_rel_error: 0.0,
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
        checked: params.len(),
    };
    for r in results {
        let (i, a, n) = r?;
        let rel = (a - n).abs() / a.abs().max(n.abs()).max(FD_ABS_FLOOR);
        if rel > worst.max_rel_error {
            worst.max_rel_error = rel;
            worst.worst_index = i;
            worst.analytic = a;
            worst.numeric = n;
        }
    }
    Ok(worst)
}
