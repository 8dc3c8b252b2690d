use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use super::gradient::{batch_gradient, predict_all, Trainable};
use super::TrainConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mae: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: Vec<f64>,
    /// Parameters at the epoch with the lowest validation MAE.
    pub best: Option<(usize, Vec<f64>)>,
    pub curve: Vec<EpochStats>,
}

/// Shuffled minibatch Adam on mean squared error.
///
/// Shuffling and dropout draw from streams derived from
/// `config.shuffle_seed`, so two runs with equal inputs are bit-identical.
pub fn fit<M: Trainable>(
    model: &M,
    initial: Vec<f64>,
    train: &[M::Example],
    validation: Option<&[M::Example]>,
    config: &TrainConfig,
) -> Result<FitResult>
where
    M::Example: Clone,
{
    config.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyDataset("no training examples".into()));
    }
    if initial.len() != model.param_count() {
        return Err(Error::Dimension {
            what: "initial parameters".into(),
            expected: model.param_count(),
            got: initial.len(),
        });
    }
    let mut params = initial;
    let mut adam = AdamState::new(params.len());
    let mut order_rng = ChaCha8Rng::seed_from_u64(config.shuffle_seed);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(config.shuffle_seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let val_targets: Option<Vec<f64>> = validation
        .map(|v| v.iter().map(|e| model.target(e)).collect())
        .transpose()?;

    let mut curve = Vec::with_capacity(config.epochs);
    let mut best: Option<(usize, f64, Vec<f64>)> = None;
    let mut since_best = 0;
    let use_dropout = model.dropout_rate() > 0.0;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut order_rng);
        let mut weighted = 0.0;
        for idx in order.chunks(config.batch_size) {
            let batch: Vec<M::Example> = idx.iter().map(|&i| train[i].clone()).collect();
            let seed = dropout_rng.next_u64();
            let (loss, grads) = batch_gradient(model, &params, &batch, use_dropout.then_some(seed))?;
            weighted += loss * batch.len() as f64;
            adam_step(&mut adam, &mut params, &grads, config.lr, &config.adam);
        }
        let train_mse = weighted / train.len() as f64;
        if !train_mse.is_finite() {
            return Err(Error::NonFinite(format!("training loss at epoch {epoch}")));
        }

        let val_mae = match (validation, &val_targets) {
            (Some(v), Some(t)) if !v.is_empty() => {
                let preds = predict_all(model, &params, v)?;
                Some(preds.iter().zip(t).map(|(p, y)| (p - y).abs()).sum::<f64>() / t.len() as f64)
            }
            _ => None,
        };
        curve.push(EpochStats {
            epoch,
            train_mse,
            val_mae,
        });

        if let Some(mae) = val_mae {
            if best.as_ref().is_none_or(|(_, b, _)| mae < *b) {
                best = Some((epoch, mae, params.clone()));
                since_best = 0;
            } else {
                since_best += 1;
            }
            if config.early_stop.is_some_and(|es| since_best >= es.patience) {
                break;
            }
        }
    }
    Ok(FitResult {
        params,
        best: best.map(|(e, _, p)| (e, p)),
        curve,
    })
}
