use serde::{Deserialize, Serialize};

use crate::embed::{EmbeddedTrial, Segment};
use crate::encoder::concat_features;
use crate::error::Result;
use crate::ingest::Phase;

/// One trial as a fixed-length vector with no learned text encoder:
/// `[phase | drug | disease | mean inclusion | mean exclusion]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatExample {
    pub nct_id: String,
    pub phase: Phase,
    pub x: Vec<f64>,
    pub y: Option<f64>,
}

/// Masked mean of the raw sentence rows of one segment; zeros when empty.
fn segment_mean(trial: &EmbeddedTrial, seg: Segment) -> Vec<f64> {
    let mut out = vec![0.0; trial.dim];
    let mut n = 0usize;
    for slot in trial.active_slots() {
        if trial.segment[slot] == seg {
            out.iter_mut().zip(trial.sentence(slot)).for_each(|(o, v)| *o += v);
            n += 1;
        }
    }
    if n > 0 {
        out.iter_mut().for_each(|o| *o /= n as f64);
    }
    out
}

pub fn flat_features(trial: &EmbeddedTrial) -> Result<FlatExample> {
    let x = concat_features(
        &trial.phase_onehot,
        &trial.drug_vec,
        &trial.disease_vec,
        &segment_mean(trial, Segment::Inclusion),
        &segment_mean(trial, Segment::Exclusion),
    )?;
    Ok(FlatExample {
        nct_id: trial.nct_id.clone(),
        phase: trial.phase,
        x,
        y: trial.label,
    })
}
