use serde::{Deserialize, Serialize};

use super::record::{Phase, TrialRecord};
use crate::error::{Error, Result};

/// Location summary of a set of durations, in years.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSummary {
    pub phase: Phase,
    #[serde(flatten)]
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurationStats {
    #[serde(flatten)]
    pub overall: Summary,
    /// Phases with no records are absent.
    pub per_phase: Vec<PhaseSummary>,
}

/// Quantile of already-sorted data with linear interpolation between order
/// statistics (position `(n - 1) * p`).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = (sorted.len() - 1) as f64 * p;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn summarize_values(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::EmptyDataset("no durations to summarize".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(Summary {
        count: sorted.len(),
        mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        min: sorted[0],
        q1: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        q3: quantile_sorted(&sorted, 0.75),
    })
}

pub fn summarize(records: &[TrialRecord]) -> Result<DurationStats> {
    let all: Vec<f64> = records.iter().map(|r| r.duration_years).collect();
    let overall = summarize_values(&all)?;
    let mut per_phase = Vec::new();
    for phase in Phase::ALL {
        let values: Vec<f64> = records
            .iter()
            .filter(|r| r.phase == phase)
            .map(|r| r.duration_years)
            .collect();
        if !values.is_empty() {
            per_phase.push(PhaseSummary {
                phase,
                summary: summarize_values(&values)?,
            });
        }
    }
    Ok(DurationStats { overall, per_phase })
}
