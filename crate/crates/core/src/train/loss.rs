use crate::error::{Error, Result};

/// Mean squared error.
pub fn mse_loss(preds: &[f64], targets: &[f64]) -> Result<f64> {
    if preds.len() != targets.len() {
        return Err(Error::LengthMismatch(preds.len(), targets.len()));
    }
    if preds.is_empty() {
        return Err(Error::EmptyDataset("mse of zero samples".into()));
    }
    let sum: f64 = preds.iter().zip(targets).map(|(p, y)| (y - p) * (y - p)).sum();
    Ok(sum / preds.len() as f64)
}
