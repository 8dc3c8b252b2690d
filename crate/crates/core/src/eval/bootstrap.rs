use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{ensure_finite, Error, Result};

pub const DEFAULT_RESAMPLES: usize = 10_000;
pub const MIN_PAIRS: usize = 10;

/// Two-sided paired bootstrap p-value for `mean(errors_a − errors_b) = 0`.
///
/// The differences are centred to impose the null, resampled with
/// replacement `n_boot` times, and the p-value is
/// `(1 + #{|mean*| ≥ |d̄|}) / (1 + n_boot)`. Identical inputs give exactly 1.
/// Resample `r` draws from ChaCha stream `r`, so the result does not depend
/// on thread scheduling.
pub fn significance(errors_a: &[f64], errors_b: &[f64], n_boot: usize, seed: u64) -> Result<f64> {
    if errors_a.len() != errors_b.len() {
        return Err(Error::LengthMismatch(errors_a.len(), errors_b.len()));
    }
    if errors_a.len() < MIN_PAIRS {
        return Err(Error::Invalid(format!(
            "significance needs at least {MIN_PAIRS} paired errors, got {}",
            errors_a.len()
        )));
    }
    if n_boot == 0 {
        return Err(Error::Config("n_boot must be at least 1".into()));
    }
    ensure_finite("errors", errors_a)?;
    ensure_finite("errors", errors_b)?;
    let n = errors_a.len();
    let diffs: Vec<f64> = errors_a.iter().zip(errors_b).map(|(a, b)| a - b).collect();
    let observed = diffs.iter().sum::<f64>() / n as f64;
    let centred: Vec<f64> = diffs.iter().map(|d| d - observed).collect();
    let threshold = observed.abs();

    let extreme: usize = (0..n_boot)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let mut s = 0.0;
            for _ in 0..n {
                s += centred[rng.random_range(0..n)];
            }
            usize::from((s / n as f64).abs() >= threshold)
        })
        .sum();
    Ok((1 + extreme) as f64 / (1 + n_boot) as f64)
}
